#include "renpol/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string_view>

namespace renpol::data {

namespace {

std::vector<double> row_of(const Demo& d, std::size_t i, std::size_t dim) {
  return {d.states.begin() + static_cast<std::ptrdiff_t>(i * dim),
          d.states.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim)};
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw ValidationError("dataset CSV line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_size(std::string_view s, std::size_t& out) {
  s = trim(s);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

void append_double(std::string& out, double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, r.ptr);
}

}  // namespace

std::vector<double> Dataset::initial_state(std::size_t m) const { return row_of(demos.at(m), 0, dim); }

std::vector<std::vector<double>> Dataset::initial_states() const {
  std::vector<std::vector<double>> out;
  for (std::size_t m = 0; m < demos.size(); ++m) out.push_back(initial_state(m));
  return out;
}

std::vector<double> Dataset::final_state(std::size_t m) const {
  const auto& d = demos.at(m);
  return row_of(d, d.length(dim) - 1, dim);
}

Trajectory Dataset::trajectory(std::size_t m) const {
  const auto& d = demos.at(m);
  Trajectory t;
  t.dim = dim;
  t.horizon = d.length(dim);
  t.dt = t.horizon > 1 ? (d.t.back() - d.t.front()) / static_cast<double>(t.horizon - 1) : 0.0;
  t.states = d.states;
  return t;
}

std::vector<Trajectory> Dataset::trajectories() const {
  std::vector<Trajectory> out;
  for (std::size_t m = 0; m < demos.size(); ++m) out.push_back(trajectory(m));
  return out;
}

void Dataset::validate() const {
  if (demos.empty()) throw ValidationError("dataset: needs at least one demonstration");
  if (dim < 1) throw ValidationError("dataset: state dimension must be >= 1");
  for (const auto& d : demos) {
    if (d.states.empty() || d.states.size() % dim != 0 || d.t.size() != d.length(dim))
      throw ValidationError("dataset: demo " + std::to_string(d.id) + " has inconsistent sizes");
    for (double v : d.states)
      if (!std::isfinite(v)) throw ValidationError("dataset: non-finite state in demo " + std::to_string(d.id));
  }
}

std::vector<double> NormalizationSpec::apply(std::span<const double> raw) const {
  std::vector<double> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = (raw[k] + shift[k]) / scale[k];
  return out;
}

std::vector<double> NormalizationSpec::invert(std::span<const double> normalized) const {
  std::vector<double> out(normalized.size());
  for (std::size_t k = 0; k < normalized.size(); ++k) out[k] = normalized[k] * scale[k] - shift[k];
  return out;
}

bool NormalizationSpec::is_identity() const {
  return std::all_of(shift.begin(), shift.end(), [](double v) { return v == 0.0; }) &&
         std::all_of(scale.begin(), scale.end(), [](double v) { return v == 1.0; });
}

Dataset parse_csv(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ValidationError("dataset CSV: empty file");
  ++lineno;
  const auto header = split_commas(line);
  if (header.size() < 3 || trim(header[0]) != "demo_id" || trim(header[1]) != "t")
    parse_fail(lineno, "header must start with demo_id,t,y0");
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k)
    if (trim(header[k + 2]) != "y" + std::to_string(k)) parse_fail(lineno, "expected column y" + std::to_string(k));

  Dataset ds;
  ds.name = name;
  ds.dim = dim;
  std::vector<std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_commas(line);
    if (cols.size() != dim + 2)
      parse_fail(lineno, "expected " + std::to_string(dim + 2) + " columns, got " + std::to_string(cols.size()));
    std::size_t id = 0;
    if (!parse_size(cols[0], id)) parse_fail(lineno, "malformed demo_id");
    double t = 0.0;
    if (!parse_double(cols[1], t)) parse_fail(lineno, "malformed time stamp");
    if (ds.demos.empty() || ds.demos.back().id != id) {
      if (std::find(seen.begin(), seen.end(), id) != seen.end())
        parse_fail(lineno, "rows of demo " + std::to_string(id) + " are not contiguous");
      seen.push_back(id);
      ds.demos.push_back(Demo{id, {}, {}});
    }
    Demo& d = ds.demos.back();
    if (!d.t.empty() && !(t > d.t.back())) parse_fail(lineno, "time stamps must be strictly increasing within a demo");
    d.t.push_back(t);
    for (std::size_t k = 0; k < dim; ++k) {
      double v = 0.0;
      if (!parse_double(cols[k + 2], v)) parse_fail(lineno, "malformed value in column y" + std::to_string(k));
      d.states.push_back(v);
    }
  }
  if (ds.demos.empty()) throw ValidationError("dataset CSV: no data rows");

  ds.target.assign(dim, 0.0);
  for (std::size_t m = 0; m < ds.size(); ++m) {
    const auto f = ds.final_state(m);
    for (std::size_t k = 0; k < dim; ++k) ds.target[k] += f[k] / static_cast<double>(ds.size());
  }
  const auto ref = ds.final_state(0);
  for (std::size_t m = 1; m < ds.size(); ++m) {
    const auto f = ds.final_state(m);
    for (std::size_t k = 0; k < dim; ++k)
      if (std::abs(f[k] - ref[k]) > 1e-6)
        throw ValidationError("dataset: demos do not share a common final state (demo " +
                              std::to_string(ds.demos[m].id) + " differs from demo " +
                              std::to_string(ds.demos[0].id) + " by more than 1e-6)");
  }
  // exact common target when the demos agree exactly
  if (ds.size() == 1 || std::all_of(ds.demos.begin(), ds.demos.end(), [&](const Demo& d) {
        return std::equal(ref.begin(), ref.end(), d.states.end() - static_cast<std::ptrdiff_t>(dim));
      }))
    ds.target = ref;
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open dataset file " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str(), path.stem().string());
}

std::string to_csv(const Dataset& ds) {
  std::string out = "demo_id,t";
  for (std::size_t k = 0; k < ds.dim; ++k) out += ",y" + std::to_string(k);
  out += '\n';
  for (const auto& d : ds.demos) {
    const std::size_t n = d.length(ds.dim);
    for (std::size_t i = 0; i < n; ++i) {
      out += std::to_string(d.id);
      out += ',';
      append_double(out, d.t[i]);
      for (std::size_t k = 0; k < ds.dim; ++k) {
        out += ',';
        append_double(out, d.states[i * ds.dim + k]);
      }
      out += '\n';
    }
  }
  return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write dataset file " + path.string());
  f << to_csv(ds);
  if (!f) throw Error("write failed for " + path.string());
}

std::string trajectories_csv(std::span<const Trajectory> trajs) {
  Dataset ds;
  ds.dim = trajs.empty() ? 0 : trajs[0].dim;
  for (std::size_t r = 0; r < trajs.size(); ++r) {
    Demo d;
    d.id = r;
    d.states = trajs[r].states;
    for (std::size_t i = 0; i < trajs[r].horizon; ++i) d.t.push_back(static_cast<double>(i) * trajs[r].dt);
    ds.demos.push_back(std::move(d));
  }
  return to_csv(ds);
}

std::pair<Dataset, NormalizationSpec> normalize(const Dataset& ds) {
  ds.validate();
  NormalizationSpec spec;
  spec.shift.resize(ds.dim);
  spec.scale.assign(ds.dim, 1.0);
  for (std::size_t k = 0; k < ds.dim; ++k) spec.shift[k] = ds.target.empty() ? 0.0 : -ds.target[k];
  for (std::size_t k = 0; k < ds.dim; ++k) {
    double m = 0.0;
    for (const auto& d : ds.demos)
      for (std::size_t i = 0; i < d.length(ds.dim); ++i) m = std::max(m, std::abs(d.states[i * ds.dim + k] + spec.shift[k]));
    if (m > 1.0) spec.scale[k] = m;
  }
  Dataset out = ds;
  for (auto& d : out.demos)
    for (std::size_t i = 0; i < d.length(ds.dim); ++i) {
      const auto v = spec.apply(std::span<const double>(d.states.data() + i * ds.dim, ds.dim));
      std::copy(v.begin(), v.end(), d.states.begin() + static_cast<std::ptrdiff_t>(i * ds.dim));
    }
  out.target = spec.apply(ds.target);
  out.units = Units::normalized;
  return {out, spec};
}

Dataset resample(const Dataset& ds, std::size_t H) {
  if (H < 2) throw ValidationError("resample: H must be >= 2");
  ds.validate();
  Dataset out = ds;
  const std::size_t dim = ds.dim;
  for (std::size_t m = 0; m < ds.size(); ++m) {
    const Demo& src = ds.demos[m];
    const std::size_t n = src.length(dim);
    Demo dst{src.id, std::vector<double>(H), std::vector<double>(H * dim)};
    for (std::size_t k = 0; k < H; ++k) {
      if (n == 1) {
        dst.t[k] = src.t[0];
        std::copy(src.states.begin(), src.states.end(), dst.states.begin() + static_cast<std::ptrdiff_t>(k * dim));
        continue;
      }
      // exact endpoints; interior points interpolate by index fraction
      std::size_t lo = 0;
      double frac = 0.0;
      if (k == H - 1) {
        lo = n - 1;
      } else if (k > 0) {
        const double pos = static_cast<double>(k) * static_cast<double>(n - 1) / static_cast<double>(H - 1);
        lo = std::min(static_cast<std::size_t>(std::floor(pos)), n - 1);
        frac = pos - static_cast<double>(lo);
      }
      if (frac == 0.0) {
        dst.t[k] = src.t[lo];
        for (std::size_t c = 0; c < dim; ++c) dst.states[k * dim + c] = src.states[lo * dim + c];
      } else {
        dst.t[k] = (1.0 - frac) * src.t[lo] + frac * src.t[lo + 1];
        for (std::size_t c = 0; c < dim; ++c)
          dst.states[k * dim + c] = (1.0 - frac) * src.states[lo * dim + c] + frac * src.states[(lo + 1) * dim + c];
      }
    }
    out.demos[m] = std::move(dst);
  }
  return out;
}

CurveKind parse_curve_kind(const std::string& s) {
  if (s == "sine") return CurveKind::sine;
  if (s == "s_curve" || s == "s-curve") return CurveKind::s_curve;
  if (s == "line") return CurveKind::line;
  throw ValidationError("unknown curve kind '" + s + "' (expected sine, s_curve or line)");
}

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::sine: return "sine";
    case CurveKind::s_curve: return "s_curve";
    case CurveKind::line: return "line";
  }
  return "?";
}

Dataset synthesize(CurveKind kind, std::size_t M, std::size_t H, std::size_t dim, double noise_std,
                   std::uint64_t seed) {
  if (M < 1 || H < 2 || dim < 1) throw ValidationError("synthesize: need M >= 1, H >= 2, dim >= 1");
  if (!(noise_std >= 0.0)) throw ValidationError("synthesize: noise must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::uniform_real_distribution<double> extra(-0.3, 0.3);
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double pi = std::numbers::pi;

  Dataset ds;
  ds.name = to_string(kind);
  ds.dim = dim;
  ds.units = Units::normalized;
  ds.target.assign(dim, 0.0);
  const double amplitude = kind == CurveKind::line ? 0.0 : 0.3;
  for (std::size_t m = 0; m < M; ++m) {
    // initial states fanned around the upper-left quadrant at radius ~0.8
    const double theta = 0.75 * pi + 0.3 * (static_cast<double>(m) - 0.5 * static_cast<double>(M - 1)) + jitter(rng);
    const double radius = 0.8 + jitter(rng);
    std::vector<double> y0(dim, 0.0);
    std::vector<double> normal(dim, 0.0);
    if (dim == 1) {
      y0[0] = radius;
    } else {
      y0[0] = radius * std::cos(theta);
      y0[1] = radius * std::sin(theta);
      normal[0] = -std::sin(theta);
      normal[1] = std::cos(theta);
      for (std::size_t k = 2; k < dim; ++k) y0[k] = extra(rng);
    }
    Demo d;
    d.id = m;
    d.t.resize(H);
    d.states.resize(H * dim);
    for (std::size_t i = 0; i < H; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(H - 1);
      d.t[i] = s;
      const double bend = kind == CurveKind::sine ? std::sin(pi * s) : kind == CurveKind::s_curve ? std::sin(2.0 * pi * s) : 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double v = (1.0 - s) * y0[k] + amplitude * bend * normal[k];
        if (i > 0 && i + 1 < H && noise_std > 0.0) v += noise_std * noise(rng);
        d.states[i * dim + k] = v;
      }
    }
    // the last point is the target itself, independent of curve round-off
    std::fill(d.states.end() - static_cast<std::ptrdiff_t>(dim), d.states.end(), 0.0);
    ds.demos.push_back(std::move(d));
  }
  return ds;
}

namespace {

struct BallSampler {
  std::vector<std::vector<double>> inits;
  std::vector<double> radii;
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> unif{0.0, 1.0};

  BallSampler(const Dataset& ds, const SamplerSpec& spec) : rng(spec.seed) {
    ds.validate();
    if (!(spec.radius_scale >= 0.0)) throw ValidationError("sampler: radius scale must be non-negative");
    inits = ds.initial_states();
    radii.resize(inits.size());
    double max_radius = 0.0;
    for (std::size_t m = 0; m < inits.size(); ++m) {
      double n2 = 0.0;
      for (double v : inits[m]) n2 += v * v;
      radii[m] = spec.radius_scale * std::sqrt(n2);
      max_radius = std::max(max_radius, radii[m]);
    }
    if (spec.radius_scale > 0.0 && max_radius == 0.0)
      throw ValidationError("sampler: every initial state is at the origin, so the sampling radius is zero");
    if (spec.mode == SamplerMode::region_uniform) std::fill(radii.begin(), radii.end(), max_radius);
  }

  std::vector<double> draw(std::size_t m) {
    const std::size_t dim = inits[m].size();
    std::vector<double> dir(dim);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (double& v : dir) {
        v = normal(rng);
        n2 += v * v;
      }
    } while (n2 == 0.0);
    const double r = radii[m] * std::pow(unif(rng), 1.0 / static_cast<double>(dim)) / std::sqrt(n2);
    std::vector<double> y = inits[m];
    if (radii[m] > 0.0)
      for (std::size_t k = 0; k < dim; ++k) y[k] += r * dir[k];
    return y;
  }
};

}  // namespace

std::vector<std::vector<double>> sample_oos_inits(const Dataset& ds, const SamplerSpec& spec,
                                                  std::vector<std::size_t>& chosen) {
  BallSampler sampler(ds, spec);
  std::uniform_int_distribution<std::size_t> pick(0, sampler.inits.size() - 1);
  std::vector<std::vector<double>> out;
  chosen.clear();
  out.reserve(spec.count);
  for (std::size_t s = 0; s < spec.count; ++s) {
    const std::size_t m = pick(sampler.rng);
    chosen.push_back(m);
    out.push_back(sampler.draw(m));
  }
  return out;
}

std::vector<std::vector<double>> sample_oos_inits_per_demo(const Dataset& ds, const SamplerSpec& spec,
                                                           std::size_t per_demo, std::vector<std::size_t>& chosen) {
  BallSampler sampler(ds, spec);
  std::vector<std::vector<double>> out;
  chosen.clear();
  for (std::size_t m = 0; m < sampler.inits.size(); ++m)
    for (std::size_t s = 0; s < per_demo; ++s) {
      chosen.push_back(m);
      out.push_back(sampler.draw(m));
    }
  return out;
}

std::vector<std::vector<double>> sample_oos_inits(const Dataset& ds, const SamplerSpec& spec) {
  std::vector<std::size_t> chosen;
  return sample_oos_inits(ds, spec, chosen);
}

}  // namespace renpol::data
