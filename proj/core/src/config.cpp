#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "levyest/experiment.hpp"

namespace levyest {

std::string EstimatorSpec::name() const {
  switch (kind) {
    case Kind::Raw:
      return loss_name(base);
    case Kind::OneStep:
      return "OS-" + loss_name(base);
    case Kind::Rao:
      return "Rao-" + loss_name(base);
  }
  return "?";
}

EstimatorSpec EstimatorSpec::parse(const std::string& text) {
  EstimatorSpec spec;
  std::string rest = text;
  if (text.rfind("OS-", 0) == 0) {
    spec.kind = Kind::OneStep;
    rest = text.substr(3);
  } else if (text.rfind("Rao-", 0) == 0) {
    spec.kind = Kind::Rao;
    rest = text.substr(4);
  }
  if (rest == "L1")
    spec.base = LossP::L1;
  else if (rest == "L2")
    spec.base = LossP::L2;
  else if (rest == "Linf")
    spec.base = LossP::Linf;
  else
    throw validation_error("unknown estimator '" + text + "'");
  return spec;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw validation_error("malformed number '" + item + "' in " + key);
    }
  }
  return out;
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (...) {
  }
  throw validation_error("malformed number '" + s + "' in " + key);
}

long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (...) {
  }
  throw validation_error("malformed integer '" + s + "' in " + key);
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw validation_error("malformed boolean '" + s + "' in " + key);
}

std::vector<EstimatorSpec> parse_estimators(const std::string& s) {
  std::vector<EstimatorSpec> out;
  for (const auto& item : split_list(s)) out.push_back(EstimatorSpec::parse(item));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out += (i ? ", " : "") + std::string(buf);
  }
  return out;
}

std::string join_estimators(const std::vector<EstimatorSpec>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i].name();
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  cfg.noise.eps_cut = 0.0;  // resolved after parsing: default 0.01 * u_max

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw validation_error("line " + std::to_string(lineno) + ": malformed section");
      section = t.substr(1, t.size() - 2);
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw validation_error("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    std::string where = "[" + section + "] " + key;

    if (section == "drift") {
      if (key == "expr") cfg.drift_expr = val;
      else if (key == "params") cfg.param_names = split_list(val);
      else if (key == "theta_true") cfg.theta_true = parse_doubles(val, where);
      else throw validation_error("unknown key " + where);
    } else if (section == "noise") {
      if (key == "alpha") cfg.noise.alpha = parse_double(val, where);
      else if (key == "u_max") cfg.noise.u_max = parse_double(val, where);
      else if (key == "eps_cut") { cfg.noise.eps_cut = parse_double(val, where); cfg.eps_cut_given = true; }
      else if (key == "scale") cfg.noise.scale = parse_double(val, where);
      else if (key == "c") cfg.noise.c = parse_double(val, where);
      else throw validation_error("unknown key " + where);
    } else if (section == "sim") {
      if (key == "h") cfg.sim.h = parse_double(val, where);
      else if (key == "n") cfg.sim.n = static_cast<int>(parse_int(val, where));
      else if (key == "x0") cfg.sim.x0 = parse_double(val, where);
      else if (key == "substeps") cfg.sim.substeps = static_cast<int>(parse_int(val, where));
      else throw validation_error("unknown key " + where);
    } else if (section == "estimate") {
      if (key == "estimators") cfg.estimators = parse_estimators(val);
      else if (key == "repetitions") cfg.repetitions = static_cast<int>(parse_int(val, where));
      else if (key == "start") cfg.start = parse_doubles(val, where);
      else if (key == "bracket_radius") cfg.bracket_radius = parse_double(val, where);
      else if (key == "tol") cfg.tol = parse_double(val, where);
      else throw validation_error("unknown key " + where);
    } else if (section == "solver") {
      if (key == "omega") cfg.ssor_omega = parse_double(val, where);
      else if (key == "linear_tol") cfg.linear_tol = parse_double(val, where);
      else if (key == "linear_max_iter") cfg.linear_max_iter = static_cast<int>(parse_int(val, where));
      else if (key == "bw_delta") cfg.hybrid.bw_delta = parse_double(val, where);
      else if (key == "bw_q") cfg.hybrid.bw_q = parse_double(val, where);
      else if (key == "bw_eps") cfg.hybrid.bw_eps = parse_double(val, where);
      else if (key == "bw_max_rounds") cfg.hybrid.bw_max_rounds = static_cast<int>(parse_int(val, where));
      else if (key == "hj_step0") cfg.hybrid.hj_step0 = parse_double(val, where);
      else if (key == "hj_shrink") cfg.hybrid.hj_shrink = parse_double(val, where);
      else if (key == "hj_eps") cfg.hybrid.hj_eps = parse_double(val, where);
      else if (key == "hj_max_rounds") cfg.hybrid.hj_max_rounds = static_cast<int>(parse_int(val, where));
      else if (key == "minimax_beta") cfg.minimax_beta = parse_double(val, where);
      else if (key == "armijo_grad_tol") cfg.armijo.grad_tol = parse_double(val, where);
      else if (key == "armijo_max_iters") cfg.armijo.max_iters = static_cast<int>(parse_int(val, where));
      else if (key == "anneal_stages") cfg.armijo.anneal_stages = static_cast<int>(parse_int(val, where));
      else throw validation_error("unknown key " + where);
    } else if (section == "onestep") {
      if (key == "replicas") cfg.onestep.replicas = static_cast<int>(parse_int(val, where));
      else if (key == "radius_factor") cfg.onestep.radius_factor = parse_double(val, where);
      else if (key == "dx_floor_factor") cfg.onestep.dx_floor_factor = parse_double(val, where);
      else if (key == "substeps") cfg.onestep.substeps = static_cast<int>(parse_int(val, where));
      else if (key == "step_cap") cfg.onestep.step_cap = parse_double(val, where);
      else if (key == "n0") cfg.onestep.n0 = static_cast<int>(parse_int(val, where));
      else if (key == "min_interval_fraction") cfg.onestep.min_interval_fraction = parse_double(val, where);
      else if (key == "mode") {
        if (val == "per-interval") cfg.onestep.mode = ScoreMode::PerInterval;
        else if (val == "whole-path") cfg.onestep.mode = ScoreMode::WholePath;
        else throw validation_error("mode must be per-interval or whole-path");
      } else throw validation_error("unknown key " + where);
    } else if (section == "efficiency") {
      if (key == "trajectories") cfg.eff_trajectories = static_cast<int>(parse_int(val, where));
      else if (key == "n0") cfg.eff_n0 = static_cast<int>(parse_int(val, where));
      else if (key == "bridge_radius_factor") cfg.eff_bridge_radius_factor = parse_double(val, where);
      else if (key == "estimators") cfg.eff_estimators = parse_estimators(val);
      else if (key == "dump_paths") cfg.eff_dump_paths = parse_bool(val, where);
      else throw validation_error("unknown key " + where);
    } else if (section == "bench") {
      if (key == "seeds") cfg.bench_seeds = static_cast<int>(parse_int(val, where));
      else throw validation_error("unknown key " + where);
    } else if (section == "run") {
      if (key == "seed") cfg.master_seed = static_cast<std::uint64_t>(std::stoull(val));
      else if (key == "workers") cfg.workers = static_cast<int>(parse_int(val, where));
      else throw validation_error("unknown key " + where);
    } else {
      throw validation_error("unknown section [" + section + "]");
    }
  }

  if (!cfg.eps_cut_given || cfg.noise.eps_cut <= 0.0)
    cfg.noise.eps_cut = 0.01 * cfg.noise.u_max;
  cfg.noise.horizon = cfg.sim.h * cfg.sim.n;
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw validation_error("repetitions must be at least 1");
  if (param_names.empty()) throw validation_error("no drift parameters declared");
  if (theta_true.size() != param_names.size())
    throw validation_error("theta_true length must match params");
  if (!start.empty() && start.size() != param_names.size())
    throw validation_error("start length must match params");
  sim.validate();
  NoiseConfig nc = noise;
  nc.horizon = total_time();
  nc.validate();
  // parseability of the drift is part of validation
  DriftModel model(drift_expr, param_names);
  (void)model;
}

EstimateOptions ExperimentConfig::estimate_options() const {
  EstimateOptions o;
  o.start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_names.size()));
  for (std::size_t i = 0; i < start.size(); ++i)
    o.start[static_cast<Eigen::Index>(i)] = start[i];
  o.bracket_radius = bracket_radius;
  o.tol = tol;
  o.hybrid = hybrid;
  o.minimax_beta = minimax_beta;
  o.armijo = armijo;
  o.ssor_omega = ssor_omega;
  o.linear_tol = linear_tol;
  o.linear_max_iter = linear_max_iter;
  return o;
}

std::string ExperimentConfig::to_string() const {
  std::ostringstream o;
  o << "# levyest experiment config (effective)\n";
  o << "[drift]\n";
  o << "expr = " << drift_expr << "\n";
  o << "params = ";
  for (std::size_t i = 0; i < param_names.size(); ++i)
    o << (i ? ", " : "") << param_names[i];
  o << "\n";
  o << "theta_true = " << join_doubles(theta_true) << "\n\n";
  o << "[noise]\n";
  o << "alpha = " << fmt(noise.alpha) << "\n";
  o << "u_max = " << fmt(noise.u_max) << "\n";
  o << "eps_cut = " << fmt(noise.eps_cut) << "\n";
  o << "scale = " << fmt(noise.scale) << "\n";
  o << "c = " << fmt(noise.c) << "\n\n";
  o << "[sim]\n";
  o << "h = " << fmt(sim.h) << "\n";
  o << "n = " << sim.n << "\n";
  o << "x0 = " << fmt(sim.x0) << "\n";
  o << "substeps = " << sim.substeps << "\n\n";
  o << "[estimate]\n";
  o << "estimators = " << join_estimators(estimators) << "\n";
  o << "repetitions = " << repetitions << "\n";
  if (!start.empty()) o << "start = " << join_doubles(start) << "\n";
  o << "bracket_radius = " << fmt(bracket_radius) << "\n";
  o << "tol = " << fmt(tol) << "\n\n";
  o << "[solver]\n";
  o << "omega = " << fmt(ssor_omega) << "\n";
  o << "linear_tol = " << fmt(linear_tol) << "\n";
  o << "linear_max_iter = " << linear_max_iter << "\n";
  o << "bw_delta = " << fmt(hybrid.bw_delta) << "\n";
  o << "bw_q = " << fmt(hybrid.bw_q) << "\n";
  o << "bw_eps = " << fmt(hybrid.bw_eps) << "\n";
  o << "bw_max_rounds = " << hybrid.bw_max_rounds << "\n";
  o << "hj_step0 = " << fmt(hybrid.hj_step0) << "\n";
  o << "hj_shrink = " << fmt(hybrid.hj_shrink) << "\n";
  o << "hj_eps = " << fmt(hybrid.hj_eps) << "\n";
  o << "hj_max_rounds = " << hybrid.hj_max_rounds << "\n";
  o << "minimax_beta = " << fmt(minimax_beta) << "\n";
  o << "armijo_grad_tol = " << fmt(armijo.grad_tol) << "\n";
  o << "armijo_max_iters = " << armijo.max_iters << "\n";
  o << "anneal_stages = " << armijo.anneal_stages << "\n\n";
  o << "[onestep]\n";
  o << "replicas = " << onestep.replicas << "\n";
  o << "radius_factor = " << fmt(onestep.radius_factor) << "\n";
  o << "dx_floor_factor = " << fmt(onestep.dx_floor_factor) << "\n";
  o << "substeps = " << onestep.substeps << "\n";
  o << "step_cap = " << fmt(onestep.step_cap) << "\n";
  o << "mode = "
    << (onestep.mode == ScoreMode::PerInterval ? "per-interval" : "whole-path") << "\n";
  o << "n0 = " << onestep.n0 << "\n";
  o << "min_interval_fraction = " << fmt(onestep.min_interval_fraction) << "\n\n";
  o << "[efficiency]\n";
  o << "trajectories = " << eff_trajectories << "\n";
  o << "n0 = " << eff_n0 << "\n";
  o << "bridge_radius_factor = " << fmt(eff_bridge_radius_factor) << "\n";
  if (!eff_estimators.empty())
    o << "estimators = " << join_estimators(eff_estimators) << "\n";
  o << "dump_paths = " << (eff_dump_paths ? "true" : "false") << "\n\n";
  o << "[bench]\n";
  o << "seeds = " << bench_seeds << "\n\n";
  o << "[run]\n";
  o << "seed = " << master_seed << "\n";
  o << "workers = " << workers << "\n";
  return o.str();
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto est_eq = [](const std::vector<EstimatorSpec>& x,
                   const std::vector<EstimatorSpec>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].kind != y[i].kind || x[i].base != y[i].base) return false;
    return true;
  };
  return a.drift_expr == b.drift_expr && a.param_names == b.param_names &&
         a.theta_true == b.theta_true && a.noise.alpha == b.noise.alpha &&
         a.noise.u_max == b.noise.u_max && a.noise.eps_cut == b.noise.eps_cut &&
         a.noise.scale == b.noise.scale && a.noise.c == b.noise.c &&
         a.sim.h == b.sim.h && a.sim.n == b.sim.n && a.sim.x0 == b.sim.x0 &&
         a.sim.substeps == b.sim.substeps && est_eq(a.estimators, b.estimators) &&
         a.repetitions == b.repetitions && a.start == b.start &&
         a.bracket_radius == b.bracket_radius && a.tol == b.tol &&
         a.ssor_omega == b.ssor_omega && a.linear_tol == b.linear_tol &&
         a.linear_max_iter == b.linear_max_iter &&
         a.hybrid.bw_delta == b.hybrid.bw_delta && a.hybrid.bw_q == b.hybrid.bw_q &&
         a.hybrid.bw_eps == b.hybrid.bw_eps &&
         a.hybrid.bw_max_rounds == b.hybrid.bw_max_rounds &&
         a.hybrid.hj_step0 == b.hybrid.hj_step0 &&
         a.hybrid.hj_shrink == b.hybrid.hj_shrink &&
         a.hybrid.hj_eps == b.hybrid.hj_eps &&
         a.hybrid.hj_max_rounds == b.hybrid.hj_max_rounds &&
         a.minimax_beta == b.minimax_beta &&
         a.armijo.grad_tol == b.armijo.grad_tol &&
         a.armijo.max_iters == b.armijo.max_iters &&
         a.armijo.anneal_stages == b.armijo.anneal_stages &&
         a.onestep.replicas == b.onestep.replicas &&
         a.onestep.radius_factor == b.onestep.radius_factor &&
         a.onestep.dx_floor_factor == b.onestep.dx_floor_factor &&
         a.onestep.substeps == b.onestep.substeps &&
         a.onestep.step_cap == b.onestep.step_cap &&
         a.onestep.mode == b.onestep.mode && a.onestep.n0 == b.onestep.n0 &&
         a.onestep.min_interval_fraction == b.onestep.min_interval_fraction &&
         a.eff_trajectories == b.eff_trajectories && a.eff_n0 == b.eff_n0 &&
         a.eff_bridge_radius_factor == b.eff_bridge_radius_factor &&
         est_eq(a.eff_estimators, b.eff_estimators) &&
         a.eff_dump_paths == b.eff_dump_paths && a.bench_seeds == b.bench_seeds &&
         a.master_seed == b.master_seed && a.workers == b.workers;
}

}  // namespace levyest
