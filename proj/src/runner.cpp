#include "occuriesz/runner.hpp"

#include "occuriesz/limits.hpp"
#include "occuriesz/oracles.hpp"
#include "occuriesz/parallel.hpp"
#include "occuriesz/path_io.hpp"
#include "occuriesz/process_sim.hpp"
#include "occuriesz/regularity.hpp"
#include "occuriesz/rng.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace occuriesz {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- parsing

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + std::size_t(std::count(text.begin(), text.begin() + std::ptrdiff_t(offset), '\n'));
}

Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_of_offset(text, e.byte ? e.byte - 1 : 0));
  }
}

Json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      const bool integral = s.find_first_of(".eEnN") == std::string::npos;
      std::int64_t i;
      std::uint64_t u;
      double d;
      bool b;
      if (integral && YAML::convert<std::int64_t>::decode(node, i)) return i;
      if (integral && YAML::convert<std::uint64_t>::decode(node, u)) return u;
      if (YAML::convert<double>::decode(node, d)) return d;
      if (YAML::convert<bool>::decode(node, b)) return b;
      return s;
    }
  }
  return nullptr;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + file.string());
  out << text;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

// ---------------------------------------------------------------- SDE coefficient families

// drift: zero | linear (coefficient c: V_0(x) = c x); diffusion: identity | scaled (sigma) | geometric (V(x) = diag(x))
SdeCoefficients sde_from_json(const Json& j, int d) {
  SdeCoefficients c;
  c.x0 = j.contains("x0") ? to_eigen(j.at("x0").get<std::vector<double>>()) : Eigen::VectorXd::Ones(d);
  const std::string drift = j.value("drift", "zero");
  const double drift_coef = j.value("drift_coefficient", 0.0);
  if (drift == "zero")
    c.drift = [d](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(d); };
  else if (drift == "linear")
    c.drift = [drift_coef](const Eigen::VectorXd& x) { return Eigen::VectorXd(drift_coef * x); };
  else
    throw ParameterError("unknown SDE drift family '" + drift + "'");
  const std::string diffusion = j.value("diffusion", "identity");
  const double sigma = j.value("sigma", 1.0);
  if (diffusion == "identity" || diffusion == "scaled") {
    const double s = diffusion == "identity" ? 1.0 : sigma;
    c.diffusion = [d, s](const Eigen::VectorXd&) { return Eigen::MatrixXd(s * Eigen::MatrixXd::Identity(d, d)); };
    c.ellipticity = s * s;
  } else if (diffusion == "geometric") {
    c.diffusion = [](const Eigen::VectorXd& x) { return Eigen::MatrixXd(x.asDiagonal()); };
    c.ellipticity = 0.0;
  } else {
    throw ParameterError("unknown SDE diffusion family '" + diffusion + "'");
  }
  c.ellipticity = j.value("ellipticity", c.ellipticity);
  return c;
}

// ---------------------------------------------------------------- operation catalogue

struct OperationInfo {
  const char* name;
  const char* group;
  bool needs_alpha;
  bool admissibility;  // alpha must satisfy the parameter restriction of the regularity results
};

constexpr OperationInfo kOperations[] = {
    {"simulate", "simulate", false, false},
    {"potential", "potential", true, false},
    {"sup_potential", "potential", true, false},
    {"alpha_to_zero", "limits", false, false},
    {"average_density", "limits", false, false},
    {"varying_order", "limits", false, false},
    {"kernel_identities", "limits", false, false},
    {"sup_L_scaling", "regularity", true, true},
    {"lower_oscillation", "regularity", false, false},
    {"modulus_of_continuity", "regularity", false, false},
    {"potential_field_holder", "regularity", true, true},
    {"assumption_i_sweep", "oracle", false, false},
    {"lnd_constant", "oracle", false, false},
    {"moment_bound", "oracle", false, false},
    {"tail_bound", "oracle", true, true},
    {"simplex_beta", "oracle", false, false},
    {"maximum_principle", "oracle", true, false},
};

const OperationInfo* find_operation(std::string_view name) {
  for (const auto& op : kOperations)
    if (name == op.name) return &op;
  return nullptr;
}

// ---------------------------------------------------------------- serialization of results

Json fit_json(const ScalingFit& f) {
  Json j;
  j["type"] = "scaling_fit";
  j["statistic"] = f.statistic;
  j["label"] = f.label;
  j["radii"] = f.radii;
  j["window_samples"] = f.window_samples;
  j["used"] = f.used;
  j["statistics"] = f.statistics;
  j["aggregate"] = std::string(to_string(f.aggregate));
  j["expected"] = f.expected;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["ci"] = {f.ci.first, f.ci.second};
  j["correction"] = {{"kind", f.correction_kind},
                     {"exponent", f.correction_exponent},
                     {"slope", f.slope_corrected},
                     {"ci", {f.ci_corrected.first, f.ci_corrected.second}}};
  if (f.normalized_min) j["normalized_min"] = *f.normalized_min;
  if (f.ratio_spread) j["ratio_spread"] = *f.ratio_spread;
  j["normalized"] = f.normalized;
  j["notes"] = f.notes;
  return j;
}

Json bound_json(const BoundReport& r) {
  Json j;
  j["type"] = "bound_report";
  j["name"] = r.name;
  j["n_configs"] = r.n_configs;
  j["violations"] = r.violations;
  j["skipped"] = r.skipped;
  j["worst_ratio"] = r.worst_ratio;
  j["passed"] = r.passed();
  Json w;
  w["partition"] = r.partition;
  Json xi = Json::array();
  for (Eigen::Index i = 0; i < r.xi.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index l = 0; l < r.xi.cols(); ++l) row.push_back(r.xi(i, l));
    xi.push_back(row);
  }
  w["xi"] = xi;
  w["k"] = r.k;
  j["witness"] = w;
  j["constants"] = r.constants;
  j["notes"] = r.notes;
  return j;
}

Json density_json(const DensityLimitReport& r) {
  Json j;
  j["type"] = "density_limit";
  j["kind"] = r.kind;
  j["x"] = to_vector(r.x);
  j["order"] = r.order;
  j["parameters"] = r.parameters;
  j["values"] = r.values;
  j["extrapolated"] = r.extrapolated;
  j["stability"] = r.stability;
  j["last_difference"] = r.last_difference;
  j["divergent"] = r.divergent;
  if (r.comparison) j["comparison"] = *r.comparison;
  if (r.relative_difference) j["relative_difference"] = *r.relative_difference;
  return j;
}

// ---------------------------------------------------------------- parameter access

struct Params {
  const Json& j;
  double number(const char* key, double fallback) const { return j.contains(key) ? j.at(key).get<double>() : fallback; }
  std::optional<double> maybe(const char* key) const {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  }
  std::size_t count(const char* key, std::size_t fallback) const {
    return j.contains(key) ? j.at(key).get<std::size_t>() : fallback;
  }
  std::vector<double> list(const char* key, std::vector<double> fallback = {}) const {
    return j.contains(key) ? j.at(key).get<std::vector<double>>() : fallback;
  }
  std::string text(const char* key, std::string fallback) const {
    return j.contains(key) ? j.at(key).get<std::string>() : fallback;
  }
};

// Evaluation sites: explicit "points" or the path position at each of "times" (default T / 2).
std::vector<Eigen::VectorXd> sites_for(const Params& p, const SamplePath& path) {
  std::vector<Eigen::VectorXd> out;
  if (p.j.contains("points")) {
    for (const auto& row : p.j.at("points")) out.push_back(to_eigen(row.get<std::vector<double>>()));
    return out;
  }
  const double T = path.horizon();
  for (double t : p.list("times", {0.5 * T})) {
    const Eigen::Index n = path.size() - 1;
    const Eigen::Index i = std::clamp<Eigen::Index>(Eigen::Index(std::llround(t / T * double(n))), 0, n);
    out.push_back(path.point(i).transpose());
  }
  return out;
}

std::optional<Aggregate> aggregate_param(const Params& p) {
  if (!p.j.contains("aggregate")) return std::nullopt;
  const std::string a = p.text("aggregate", "");
  if (a == "max") return Aggregate::Max;
  if (a == "min") return Aggregate::Min;
  if (a == "median") return Aggregate::Median;
  throw ParameterError("aggregate must be max, min or median");
}

CovarianceModel gaussian_model(const ProcessSpec& spec) {
  if (spec.kind == ProcessKind::BROWNIAN) return brownian_model(spec.dim);
  if (spec.kind == ProcessKind::FBM) return fbm_model(spec.hurst, spec.dim);
  throw ParameterError("operation needs a Gaussian process (FBM or BROWNIAN)");
}

// ---------------------------------------------------------------- execution

struct RunOutput {
  std::map<std::string, std::string> files;  // relative path -> bytes
  std::vector<std::string> on_disk;            // written by the operation itself
  std::vector<std::size_t> failed;
  std::vector<CheckResult> checks;
};

template <typename F>
void per_replication(const ExperimentConfig& c, int workers, RunOutput& out, std::vector<std::string>& chunks, F&& body) {
  chunks.assign(c.replications, std::string());
  std::vector<char> failed(c.replications, 0);
  parallel_for(c.replications, workers, [&](std::size_t r) {
    try {
      chunks[r] = body(r);
    } catch (const std::exception&) {
      failed[r] = 1;
    }
  });
  for (std::size_t r = 0; r < c.replications; ++r)
    if (failed[r]) out.failed.push_back(r);
}

std::string join(const std::vector<std::string>& chunks) {
  std::string s;
  for (const auto& c : chunks) s += c;
  return s;
}

std::string scaling_csv(const ScalingFit& f) {
  std::string s = "replication";
  for (double r : f.radii) s += "," + num(r);
  s += "\n";
  for (std::size_t i = 0; i < f.per_rep.size(); ++i) {
    s += std::to_string(i);
    for (double v : f.per_rep[i]) s += "," + num(v);
    s += "\n";
  }
  return s;
}

RunOutput execute(const ExperimentConfig& c, int workers) {
  RunOutput out;
  const Params p{c.parameters};
  ProcessSpec spec = c.process;
  spec.seed = c.seed;
  const std::string& op = c.operation;
  std::vector<std::string> chunks;

  if (op == "simulate") {
    const bool binary = p.text("format", "csv") == "binary";
    std::vector<std::string> names(c.replications);
    fs::create_directories(c.output / "paths");
    per_replication(c, workers, out, chunks, [&](std::size_t r) {
      const SamplePath path = simulate(spec, r);
      char name[32];
      std::snprintf(name, sizeof name, "paths/rep_%06zu.%s", r, binary ? "bin" : "csv");
      const PathHeader header = make_header(spec, derive_seed(c.seed, r));
      if (binary)
        write_path_binary(c.output / name, path, header);
      else
        write_path_csv(c.output / name, path, header);
      names[r] = name;
      return std::string();
    });
    for (const auto& n : names)
      if (!n.empty()) out.on_disk.push_back(n);
    return out;
  }

  if (op == "potential" || op == "sup_potential") {
    const double alpha = p.number("alpha", 0.0);
    const double T = spec.horizon;
    const double s = p.number("s", 0.0), t = p.number("t", T);
    const bool sup = op == "sup_potential";
    per_replication(c, workers, out, chunks, [&](std::size_t r) {
      const SamplePath path = simulate(spec, r);
      const OccupationMeasure occ = occupation_measure(path, s, t);
      std::string rows;
      if (sup) {
        SupOptions so;
        so.max_sites = p.count("max_sites", 4096);
        const SupPotential sp = sup_potential_over_space(occ, alpha, so);
        rows += std::to_string(r) + "," + num(sp.value) + "," + num(sp.argmax_time) + "," + num(sp.principle_factor) +
                "," + std::to_string(sp.sites) + "\n";
      } else {
        const auto sites = sites_for(p, path);
        for (std::size_t k = 0; k < sites.size(); ++k) {
          const PotentialEstimate e = rescaled_potential(occ, alpha, sites[k]);
          rows += std::to_string(r) + "," + std::to_string(k);
          for (Eigen::Index l = 0; l < e.x.size(); ++l) rows += "," + num(e.x(l));
          rows += "," + num(e.value) + "," + num(e.err_bound) + "," + (e.divergent ? "1" : "0") + "\n";
        }
      }
      return rows;
    });
    std::string header;
    if (sup) {
      header = "replication,sup_L,argmax_time,principle_factor,sites\n";
    } else {
      header = "replication,point";
      for (int l = 0; l < spec.dim; ++l) header += ",x" + std::to_string(l + 1);
      header += ",L,err_bound,divergent\n";
    }
    out.files[sup ? "sup_potential.csv" : "potential.csv"] = header + join(chunks);
    return out;
  }

  if (op == "kernel_identities") {
    Json rows = Json::array();
    bool ok = true;
    for (double eps : p.list("eps", {0.1, 0.5, 1.0}))
      for (double r : p.list("r", {0.0, 0.25, 0.5})) {
        const KernelIdentityReport k = kernel_identities(eps, r);
        rows.push_back({{"eps", eps},
                        {"r", r},
                        {"normalization", k.normalization},
                        {"specific", k.specific},
                        {"specific_exact", k.specific_exact}});
        ok = ok && k.normalization_error() < 1e-8 && k.specific_error() < 1e-8;
      }
    out.files["kernel_identities.json"] = Json{{"type", "kernel_identities"}, {"rows", rows}}.dump(2) + "\n";
    out.checks.push_back({"kernel identities within 1e-8", ok, ""});
    return out;
  }

  if (op == "alpha_to_zero" || op == "average_density" || op == "varying_order") {
    const double T = spec.horizon;
    const double s0 = p.number("interval_start", 0.0), t0 = p.number("interval_end", T);
    std::vector<Json> per(c.replications);
    per_replication(c, workers, out, chunks, [&](std::size_t r) {
      const SamplePath path = simulate(spec, r);
      const OccupationMeasure occ = occupation_measure(path, s0, t0);
      Json reps = Json::array();
      for (const auto& x : sites_for(p, path)) {
        DensityLimitReport rep;
        if (op == "alpha_to_zero")
          rep = potential_limit_alpha_to_zero(occ, x, p.list("alpha_grid", default_order_grid()));
        else if (op == "average_density")
          rep = average_density(occ, p.number("s", spec.dim), x, p.list("u_grid", default_u_grid()));
        else
          rep = potential_limit_varying_order(occ, p.number("s", spec.dim), x, p.list("eps_grid", default_order_grid()),
                                              p.list("u_grid", default_u_grid()));
        Json jr = density_json(rep);
        jr["replication"] = r;
        reps.push_back(jr);
      }
      per[r] = reps;
      return std::string();
    });
    Json all = Json::array();
    for (std::size_t r = 0; r < c.replications; ++r)
      for (auto& item : per[r]) all.push_back(std::move(item));
    out.files["limits.json"] = Json{{"type", "density_limits"}, {"reports", all}}.dump(2) + "\n";
    return out;
  }

  if (op == "sup_L_scaling" || op == "lower_oscillation" || op == "modulus_of_continuity") {
    PathSource source = path_source(spec);
    ScalingOptions so;
    so.n_reps = c.replications;
    so.t_center = p.maybe("t_center");
    if (p.j.contains("radii")) so.radii = p.list("radii");
    so.min_window_samples = p.count("min_window_samples", so.min_window_samples);
    so.aggregate = aggregate_param(p);
    so.bootstrap = int(p.count("bootstrap", std::size_t(so.bootstrap)));
    so.bootstrap_seed = p.j.value("bootstrap_seed", so.bootstrap_seed);
    so.workers = workers;
    so.max_sites = p.count("max_sites", so.max_sites);
    ScalingFit fit;
    if (op == "sup_L_scaling")
      fit = sup_L_scaling(source, p.number("alpha", 0.0), so);
    else if (op == "lower_oscillation")
      fit = lower_oscillation(source, p.number("alpha", 0.0), so);
    else
      fit = modulus_of_continuity(source, so);
    out.files["fit.json"] = fit_json(fit).dump(2) + "\n";
    out.files["per_rep.csv"] = scaling_csv(fit);
    if (const auto tol = p.maybe("tolerance")) {
      char name[64], detail[128];
      std::snprintf(name, sizeof name, "slope within %g", *tol);
      std::snprintf(detail, sizeof detail, "slope %.4f, expected %.4f", fit.slope, fit.expected);
      out.checks.push_back({name, fit.slope_within(*tol), detail});
      if (p.j.value("require_ci_cover", false))
        out.checks.push_back({"bootstrap CI covers the expected slope", fit.ci_covers_expected(), ""});
    }
    return out;
  }

  if (op == "potential_field_holder") {
    HolderOptions ho;
    ho.n_reps = c.replications;
    ho.t_grid = p.list("t_grid");
    ho.h_grid = p.list("h_grid");
    ho.delta_grid = p.list("delta_grid");
    ho.workers = workers;
    const HolderEstimate h =
        potential_field_holder(path_source(spec), p.number("alpha", 0.0), p.number("beta_incr", 0.0), ho);
    Json j{{"type", "holder"},
           {"alpha", h.alpha},
           {"beta_incr", h.beta_incr},
           {"gamma1", h.gamma1},
           {"gamma2", h.gamma2},
           {"gamma1_target", h.gamma1_target},
           {"gamma2_target", h.gamma2_target},
           {"delta_grid", h.delta_grid},
           {"spatial_max", h.spatial_max},
           {"h_grid", h.h_grid},
           {"temporal_max", h.temporal_max}};
    out.files["holder.json"] = j.dump(2) + "\n";
    out.checks.push_back({"spatial exponent", h.spatial_ok(), ""});
    out.checks.push_back({"temporal exponent", h.temporal_ok(), ""});
    return out;
  }

  SweepOptions sweep;
  sweep.trials = p.count("trials", 10000);
  sweep.seed = c.seed;
  sweep.horizon = spec.horizon;
  sweep.workers = workers;

  if (op == "assumption_i_sweep") {
    const BoundReport r = assumption_i_sweep(gaussian_model(spec), int(p.count("n_max", 3)), sweep);
    out.files["report.json"] = bound_json(r).dump(2) + "\n";
    out.checks.push_back({"assumption (i) sweep", r.passed(), std::to_string(r.violations) + " violations"});
    return out;
  }
  if (op == "lnd_constant") {
    const LndReport r = lnd_constant_estimate(gaussian_model(spec), int(p.count("m", 3)), sweep);
    Json j{{"type", "lnd_report"},
           {"c_hat", r.c_hat},
           {"c_hat_product", r.c_hat_product},
           {"trials", r.trials},
           {"skipped", r.skipped},
           {"witness_partition", r.witness_partition}};
    out.files["report.json"] = j.dump(2) + "\n";
    out.checks.push_back({"LND ratio positive", r.c_hat > 0, num(r.c_hat)});
    return out;
  }
  if (op == "moment_bound") {
    MomentOptions mo;
    if (p.j.contains("p_grid")) mo.p_grid = p.list("p_grid");
    if (p.j.contains("lags")) mo.lags = p.list("lags");
    mo.n_reps = c.replications;
    mo.iota = p.maybe("iota");
    mo.growth_factor = p.number("growth_factor", mo.growth_factor);
    mo.workers = workers;
    const BoundReport r = moment_bound_check(spec, mo);
    out.files["report.json"] = bound_json(r).dump(2) + "\n";
    out.checks.push_back({"moment bound", r.passed(), std::to_string(r.violations) + " violations"});
    return out;
  }
  if (op == "tail_bound") {
    TailOptions to;
    to.interval_start = p.number("interval_start", 0.0);
    to.interval_end = p.number("interval_end", spec.horizon);
    if (p.j.contains("u_grid")) to.u_grid = p.list("u_grid");
    to.n_reps = c.replications;
    if (p.j.contains("x")) to.x = to_eigen(p.list("x"));
    to.shift_time = p.maybe("shift_time");
    to.beta_incr = p.number("beta_incr", 0.0);
    to.bootstrap = int(p.count("bootstrap", std::size_t(to.bootstrap)));
    to.workers = workers;
    const TailReport r = tail_bound_check(spec, p.number("alpha", 0.0), to);
    Json j{{"type", "tail_report"},   {"u_grid", r.u_grid},       {"thresholds", r.thresholds},
           {"survival", r.survival},  {"slope", r.slope},         {"ci", {r.ci.first, r.ci.second}},
           {"zeta", r.zeta},          {"normalizer", r.normalizer}, {"n_reps", r.n_reps}};
    out.files["report.json"] = j.dump(2) + "\n";
    out.checks.push_back({"log survival decays", r.decays(), num(r.slope)});
    return out;
  }
  if (op == "simplex_beta") {
    const SimplexIntegral s = simplex_beta_integral(int(p.count("n", 2)), p.number("a", 0.5), p.number("length", 1.0));
    Json j{{"type", "simplex_beta"}, {"closed_form", s.closed_form}, {"quadrature", s.quadrature},
           {"relative_error", s.relative_error()}};
    out.files["report.json"] = j.dump(2) + "\n";
    out.checks.push_back({"quadrature matches closed form", s.relative_error() < p.number("tolerance", 1e-3), ""});
    return out;
  }
  if (op == "maximum_principle") {
    MaximumPrincipleOptions mo;
    mo.trials = c.replications;
    mo.resolution = p.number("resolution", mo.resolution);
    mo.margin = p.number("margin", mo.margin);
    mo.max_sites = p.count("max_sites", mo.max_sites);
    mo.workers = workers;
    const BoundReport r =
        maximum_principle_check([&](std::uint64_t k) { return simulate(spec, k); }, p.number("alpha", 0.0), mo);
    out.files["report.json"] = bound_json(r).dump(2) + "\n";
    out.checks.push_back({"maximum principle", r.passed(), std::to_string(r.violations) + " violations"});
    return out;
  }
  throw ParameterError("unknown operation '" + op + "'");
}

// ---------------------------------------------------------------- plot data

struct Series {
  std::string name;
  std::vector<double> x, y;
};

std::string svg_plot(const std::string& title, const std::vector<Series>& series, const std::string& xlabel,
                     const std::string& ylabel) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double W = 480, Hh = 360, m = 50;
  auto px = [&](double x) { return m + (x - x0) / (x1 - x0) * (W - 2 * m); };
  auto py = [&](double y) { return Hh - m - (y - y0) / (y1 - y0) * (Hh - 2 * m); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\">\n";
  os << "<text x=\"" << m << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  os << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << W - 2 * m << "\" height=\"" << Hh - 2 * m
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << Hh - 10 << "\" font-size=\"11\">" << xlabel << "</text>\n";
  os << "<text x=\"5\" y=\"" << Hh / 2 << "\" font-size=\"11\">" << ylabel << "</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* col = colors[k % 4];
    if (s.name == "points") {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << px(s.x[i]) << "," << py(s.y[i]) << " ";
      os << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<double> finite_doubles(const Json& arr) {
  std::vector<double> v;
  for (const auto& e : arr) v.push_back(e.is_number() ? e.get<double>() : std::numeric_limits<double>::quiet_NaN());
  return v;
}

}  // namespace

// ---------------------------------------------------------------- config

std::string_view operation_group(std::string_view operation) {
  const OperationInfo* op = find_operation(operation);
  return op ? op->group : "";
}

std::vector<std::string> operations_in(std::string_view group) {
  std::vector<std::string> out;
  for (const auto& op : kOperations)
    if (group == op.group) out.emplace_back(op.name);
  return out;
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("config must be a mapping", 1);
  ExperimentConfig c;
  try {
    c.id = j.value("id", c.id);
    c.operation = j.value("operation", std::string());
    c.parameters = j.value("parameters", Json::object());
    c.replications = j.value("replications", c.replications);
    c.workers = j.value("workers", c.workers);
    c.output = j.value("output", c.output.string());
    c.seed = j.value("seed", c.seed);
    const Json proc = j.value("process", Json::object());
    ProcessSpec& s = c.process;
    s.kind = parse_process_kind(proc.value("kind", std::string("BROWNIAN")));
    s.hurst = proc.value("hurst", s.kind == ProcessKind::BROWNIAN ? 0.5 : s.hurst);
    s.beta_stable = proc.value("beta_stable", s.beta_stable);
    s.dim = proc.value("dim", s.dim);
    s.n_steps = proc.value("n_steps", s.n_steps);
    s.horizon = proc.value("horizon", s.horizon);
    s.micro_steps = proc.value("micro_steps", s.micro_steps);
    if (proc.contains("sde") && !proc.at("sde").is_null()) {
      c.sde = proc.at("sde");
      s.sde = sde_from_json(c.sde, s.dim);
    }
    s.seed = c.seed;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("bad config field: ") + e.what(), 0);
  }
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json proc{{"kind", std::string(to_string(c.process.kind))},
            {"hurst", c.process.hurst},
            {"beta_stable", c.process.beta_stable},
            {"dim", c.process.dim},
            {"n_steps", c.process.n_steps},
            {"horizon", c.process.horizon},
            {"micro_steps", c.process.micro_steps}};
  if (!c.sde.is_null()) proc["sde"] = c.sde;
  return Json{{"id", c.id},
              {"operation", c.operation},
              {"process", proc},
              {"parameters", c.parameters},
              {"replications", c.replications},
              {"workers", c.workers},
              {"output", c.output.string()},
              {"seed", c.seed}};
}

ExperimentConfig parse_config(std::string_view text, bool json) {
  if (json) return config_from_json(parse_json_text(text));
  YAML::Node node;
  try {
    node = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError("malformed YAML: " + e.msg, std::size_t(e.mark.line + 1));
  }
  return config_from_json(yaml_to_json(node));
}

ExperimentConfig load_config(const fs::path& file) {
  const std::string text = read_text(file);
  const auto first = text.find_first_not_of(" \t\r\n");
  return parse_config(text, file.extension() == ".json" || (first != std::string::npos && text[first] == '{'));
}

std::vector<std::string> config_violations(const ExperimentConfig& c) {
  std::vector<std::string> v;
  const OperationInfo* op = find_operation(c.operation);
  if (!op) {
    std::string names;
    for (const auto& o : kOperations) names += std::string(names.empty() ? "" : ", ") + o.name;
    v.push_back("operation: '" + c.operation + "' is not one of " + names);
  }
  if (c.replications < 1) v.push_back("replications: must be at least 1");
  if (c.workers < 0) v.push_back("workers: must be non-negative");
  for (const auto& s : spec_violations(c.process)) v.push_back("process: " + s);
  if (!op) return v;
  if (!c.parameters.is_object()) {
    v.push_back("parameters: must be a mapping");
    return v;
  }
  const double H = effective_hurst(c.process);
  const int d = c.process.dim;
  const bool has_alpha = c.parameters.contains("alpha") && c.parameters["alpha"].is_number();
  if (op->needs_alpha && !has_alpha) v.push_back(std::string("alpha: required by ") + op->name);
  if (has_alpha) {
    const double alpha = c.parameters["alpha"].get<double>();
    std::optional<double> beta;
    if (c.parameters.contains("beta_incr") && c.parameters["beta_incr"].is_number())
      beta = c.parameters["beta_incr"].get<double>();
    if (op->admissibility) {
      const Admissibility a = check_admissible(H, d, alpha, beta);
      if (!a.accepted) v.push_back(a.condition + ": " + a.reason);
    } else if (!(alpha > 0 && alpha < d) && !(alpha == 0 && c.operation == "lower_oscillation")) {
      v.push_back("riesz-order: 0 < alpha < d for " + std::string(op->name));
    }
  }
  if (c.operation == "potential_field_holder" && !c.parameters.contains("beta_incr"))
    v.push_back("beta_incr: required by potential_field_holder");
  if ((c.operation == "assumption_i_sweep" || c.operation == "lnd_constant") &&
      c.process.kind != ProcessKind::FBM && c.process.kind != ProcessKind::BROWNIAN)
    v.push_back("process: " + c.operation + " needs an exact Gaussian characteristic function (FBM or BROWNIAN)");
  if (c.operation == "simplex_beta" && c.parameters.value("a", 0.5) >= 1.0)
    v.push_back("simplex-exponent: a < 1 (the Euler integrals diverge otherwise)");
  return v;
}

void validate(const ExperimentConfig& c) {
  auto v = config_violations(c);
  if (!v.empty()) throw ValidationError(std::move(v));
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& file) { return sha256_hex(read_text(file)); }

std::string config_hash(const ExperimentConfig& c) {
  Json j = to_json(c);
  j.erase("output");
  j.erase("workers");
  return sha256_hex(j.dump());
}

// ---------------------------------------------------------------- manifest

bool ExperimentManifest::checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

Json to_json(const ExperimentManifest& m) {
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}});
  Json checks = Json::array();
  for (const auto& c : m.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return Json{{"config_hash", m.config_hash},
              {"tool_version", m.tool_version},
              {"config", m.config},
              {"seeds", m.seeds},
              {"files", files},
              {"failed_replications", m.failed_replications},
              {"checks", checks},
              {"wall_clock", {{"seconds", m.wall_seconds}, {"workers", m.workers}}}};
}

ExperimentManifest manifest_from_json(const Json& j) {
  ExperimentManifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& f : j.at("files")) m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    m.failed_replications = j.value("failed_replications", std::vector<std::size_t>{});
    for (const auto& c : j.value("checks", Json::array()))
      m.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.value("detail", "")});
    if (j.contains("wall_clock")) {
      m.wall_seconds = j["wall_clock"].value("seconds", 0.0);
      m.workers = j["wall_clock"].value("workers", 1);
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("bad manifest: ") + e.what(), 0);
  }
  return m;
}

ExperimentManifest read_manifest(const fs::path& file) {
  ExperimentManifest m = manifest_from_json(parse_json_text(read_text(file)));
  m.directory = file.parent_path();
  return m;
}

ExperimentManifest run(const ExperimentConfig& config) {
  const ExperimentConfig& c = config;
  validate(c);
  const int workers = resolve_workers(c.workers);
  fs::create_directories(c.output);
  const auto start = std::chrono::steady_clock::now();
  RunOutput out = execute(c, workers);
  const auto stop = std::chrono::steady_clock::now();

  fs::create_directories(c.output);
  ExperimentManifest m;
  m.config_hash = config_hash(c);
  m.tool_version = OCCURIESZ_VERSION;
  m.config = to_json(c);
  for (std::size_t r = 0; r < c.replications; ++r) m.seeds.push_back(derive_seed(c.seed, r));
  for (const auto& [rel, bytes] : out.files) {
    write_text(c.output / rel, bytes);
    m.files.push_back({rel, sha256_hex(bytes)});
  }
  for (const auto& rel : out.on_disk) m.files.push_back({rel, sha256_file(c.output / rel)});
  std::sort(m.files.begin(), m.files.end(), [](const FileRecord& a, const FileRecord& b) { return a.path < b.path; });
  m.failed_replications = out.failed;
  m.checks = out.checks;
  if (!out.failed.empty())
    m.checks.push_back({"replications completed", false, std::to_string(out.failed.size()) + " failed"});
  m.wall_seconds = std::chrono::duration<double>(stop - start).count();
  m.workers = workers;
  m.directory = c.output;
  write_text(c.output / kManifestName, to_json(m).dump(2) + "\n");
  return m;
}

ExperimentManifest replay(const fs::path& manifest_file, const ReplayOptions& options) {
  const ExperimentManifest recorded = read_manifest(manifest_file);
  ExperimentConfig c = config_from_json(recorded.config);
  if (options.workers) c.workers = *options.workers;
  if (options.seed) c.seed = *options.seed;
  c.output = options.output.value_or(recorded.directory / "replay");
  const ExperimentManifest fresh = run(c);

  std::map<std::string, std::string> now;
  for (const auto& f : fresh.files) now[f.path] = f.sha256;
  std::vector<std::string> diffs;
  for (const auto& f : recorded.files) {
    const auto it = now.find(f.path);
    if (it == now.end())
      diffs.push_back(f.path + ": missing");
    else if (it->second != f.sha256)
      diffs.push_back(f.path + ": expected " + f.sha256.substr(0, 12) + ", got " + it->second.substr(0, 12));
    if (it != now.end()) now.erase(it);
  }
  for (const auto& [path, sha] : now) diffs.push_back(path + ": not in the recorded manifest");
  if (fresh.seeds != recorded.seeds) diffs.push_back("replication seeds differ");
  if (!diffs.empty()) {
    std::string msg = "replay of " + manifest_file.string() + " differs in " + std::to_string(diffs.size()) + " item(s):";
    for (const auto& d : diffs) msg += "\n  " + d;
    throw ReproducibilityError(msg);
  }
  return fresh;
}

// ---------------------------------------------------------------- plot data

std::vector<fs::path> emit_plotdata(const std::vector<fs::path>& results, const fs::path& out_dir, bool svg) {
  std::vector<fs::path> written;
  fs::create_directories(out_dir);
  for (const auto& file : results) {
    const std::string text = read_text(file);
    const Json j = parse_json_text(text);
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
      throw ParseError(file.string() + ": result object without a \"type\" field", 1);
    const std::string type = j["type"].get<std::string>();
    std::vector<Series> series;
    std::string xlabel, ylabel;
    try {
      if (type == "scaling_fit") {
        xlabel = "log r";
        ylabel = "log " + j.value("statistic", std::string("statistic"));
        Series pts{"points", {}, {}}, fit{"fit", {}, {}};
        const auto radii = finite_doubles(j.at("radii"));
        const auto stats = finite_doubles(j.at("statistics"));
        const auto used = j.value("used", std::vector<bool>(radii.size(), true));
        for (std::size_t i = 0; i < std::min(radii.size(), stats.size()); ++i)
          if (used[i] && radii[i] > 0 && stats[i] > 0) {
            pts.x.push_back(std::log(radii[i]));
            pts.y.push_back(std::log(stats[i]));
          }
        if (!pts.x.empty()) {
          const double slope = j.at("slope").is_number() ? j["slope"].get<double>() : NAN;
          const double icpt = j.at("intercept").is_number() ? j["intercept"].get<double>() : NAN;
          for (double x : {*std::min_element(pts.x.begin(), pts.x.end()), *std::max_element(pts.x.begin(), pts.x.end())}) {
            fit.x.push_back(x);
            fit.y.push_back(icpt + slope * x);
          }
          series = {pts, fit};
        }
      } else if (type == "density_limit" || type == "density_limits") {
        xlabel = "parameter";
        ylabel = "value";
        const Json reports = type == "density_limit" ? Json::array({j}) : j.at("reports");
        for (std::size_t k = 0; k < reports.size(); ++k) {
          Series s{"series " + std::to_string(k), finite_doubles(reports[k].at("parameters")),
                   finite_doubles(reports[k].at("values"))};
          if (!s.x.empty()) series.push_back(s);
        }
      } else if (type == "tail_report") {
        xlabel = "u";
        ylabel = "log survival";
        Series s{"points", finite_doubles(j.at("u_grid")), {}};
        for (double v : finite_doubles(j.at("survival"))) s.y.push_back(v > 0 ? std::log(v) : NAN);
        if (!s.x.empty()) series.push_back(s);
      }
    } catch (const Json::exception& e) {
      throw ParseError(file.string() + ": " + e.what(), 1);
    }
    const fs::path stem = out_dir / file.stem();
    fs::path data = stem;
    data += ".plot.tsv";
    std::string body = "# source " + file.filename().string() + "\n# type " + type + "\n";
    if (series.empty()) {
      body += "# no data\n";
    } else {
      body += "# x: " + xlabel + "\n# y: " + ylabel + "\n";
      for (const auto& s : series) {
        body += "\n# series " + s.name + "\nx\ty\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) body += num(s.x[i]) + "\t" + num(s.y[i]) + "\n";
      }
    }
    write_text(data, body);
    written.push_back(data);
    if (svg && !series.empty()) {
      fs::path pic = stem;
      pic += ".svg";
      write_text(pic, svg_plot(file.stem().string() + " (" + type + ")", series, xlabel, ylabel));
      written.push_back(pic);
    }
  }
  return written;
}

}  // namespace occuriesz
