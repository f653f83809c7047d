#include "paracycle/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace paracycle {

namespace {

int line_of(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& msg) { throw ConfigError(line_of(n), msg); }

void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!map.IsMap()) fail(map, where + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T as(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, what + " must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(n, "cannot read " + what + " from '" + n.Scalar() + "'");
  }
}

YAML::Node require(const YAML::Node& map, const char* key, const std::string& where) {
  const YAML::Node n = map[key];
  if (!n) fail(map, where + " needs '" + key + "'");
  return n;
}

template <class T>
T get(const YAML::Node& map, const char* key, T fallback) {
  const YAML::Node n = map[key];
  return n ? as<T>(n, key) : fallback;
}

std::vector<double> double_list(const YAML::Node& n, const std::string& what) {
  if (n.IsScalar()) return {as<double>(n, what)};
  if (!n.IsSequence()) fail(n, what + " must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& v : n) out.push_back(as<double>(v, what));
  return out;
}

// ---------------------------------------------------------------- grid / bc

GridPtr parse_grid(const YAML::Node& g) {
  check_keys(g, {"counts", "extents", "coords"}, "grid");
  GridSpec spec;
  const YAML::Node counts = require(g, "counts", "grid");
  if (!counts.IsSequence() || counts.size() < 1 || counts.size() > 3) {
    fail(counts, "grid.counts must list 1 to 3 point counts");
  }
  for (const auto& c : counts) spec.counts.push_back(as<long>(c, "grid count"));
  const int dims = static_cast<int>(spec.counts.size());
  if (const YAML::Node coords = g["coords"]) {
    if (!coords.IsSequence() || static_cast<int>(coords.size()) != dims) {
      fail(coords, "grid.coords needs one list per dimension");
    }
    for (const auto& c : coords) {
      const auto v = double_list(c, "coordinate");
      spec.coords.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
    }
  } else {
    const YAML::Node ext = require(g, "extents", "grid");
    if (!ext.IsSequence() || static_cast<int>(ext.size()) != dims) {
      fail(ext, "grid.extents needs one [lo, hi] pair per dimension");
    }
    for (const auto& e : ext) {
      const auto v = double_list(e, "extent");
      if (v.size() != 2) fail(e, "each extent is a [lo, hi] pair");
      spec.extents.push_back({v[0], v[1]});
    }
  }
  try {
    return build_grid(spec);
  } catch (const Error& e) {
    fail(g, e.what());
  }
}

FaceBc parse_face(const YAML::Node& n) {
  if (n.IsScalar()) {
    const auto kind = n.as<std::string>();
    if (kind == "neumann") return FaceBc::neumann();
    if (kind == "periodic") return FaceBc::periodic();
    if (kind == "dirichlet") return FaceBc::dirichlet(0.0);
    fail(n, "unknown boundary kind '" + kind + "'");
  }
  check_keys(n, {"kind", "value"}, "boundary face");
  const auto kind = as<std::string>(require(n, "kind", "boundary face"), "kind");
  if (kind == "dirichlet") return FaceBc::dirichlet(get<double>(n, "value", 0.0));
  if (n["value"]) fail(n["value"], "only dirichlet faces take a value");
  if (kind == "neumann") return FaceBc::neumann();
  if (kind == "periodic") return FaceBc::periodic();
  fail(n, "unknown boundary kind '" + kind + "'");
}

BoundaryCondition parse_boundary(const YAML::Node& b, int dims) {
  BoundaryCondition bc;
  if (!b) return bc;
  check_keys(b, {"default", "dims"}, "boundary");
  if (const YAML::Node d = b["default"]) bc = BoundaryCondition::uniform(parse_face(d));
  if (const YAML::Node list = b["dims"]) {
    if (!list.IsSequence() || static_cast<int>(list.size()) > dims) {
      fail(list, "boundary.dims lists at most one entry per grid dimension");
    }
    for (int d = 0; d < static_cast<int>(list.size()); ++d) {
      const YAML::Node e = list[d];
      if (e.IsMap() && (e["lo"] || e["hi"])) {
        check_keys(e, {"lo", "hi"}, "boundary dimension");
        if (e["lo"]) bc.set(d, 0, parse_face(e["lo"]));
        if (e["hi"]) bc.set(d, 1, parse_face(e["hi"]));
      } else {
        bc.set(d, parse_face(e));
      }
    }
  }
  try {
    bc.validate(dims);
  } catch (const Error& e) {
    fail(b, e.what());
  }
  return bc;
}

// ------------------------------------------------------------ field presets

double grid_length(const Grid& g, const BoundaryCondition& bc, int d) {
  const Vector& x = g.coords(d);
  return x[x.size() - 1] - x[0] + (bc.periodic(d) ? g.wrap_spacing(d) : 0.0);
}

std::vector<double> per_dim(const YAML::Node& n, int dims, const std::string& what) {
  auto v = double_list(n, what);
  if (v.size() == 1 && dims > 1) v.assign(dims, v[0]);
  if (static_cast<int>(v.size()) != dims) fail(n, what + " needs one entry per dimension");
  return v;
}

Vector fill_preset(const YAML::Node& n, const Grid& g, const BoundaryCondition& bc,
                   std::optional<std::uint64_t> seed, const std::string& where) {
  const Index np = g.num_points();
  const int dims = g.dims();
  Vector out(np);
  if (n.IsScalar()) {
    out.setConstant(as<double>(n, where));
    return out;
  }
  if (!n.IsMap()) fail(n, where + " must be a number or a preset mapping");
  const auto preset = as<std::string>(require(n, "preset", where), "preset");
  const std::string ctx = where + " preset '" + preset + "'";

  auto normal_of = [&](const YAML::Node& m) {
    Eigen::Vector3d nrm = Eigen::Vector3d::Zero();
    if (m["normal"]) {
      const auto v = per_dim(m["normal"], dims, "normal");
      for (int d = 0; d < dims; ++d) nrm[d] = v[d];
    } else {
      nrm[0] = 1.0;
    }
    if (!(nrm.norm() > 0.0)) fail(m, "normal must be non-zero");
    return Eigen::Vector3d(nrm.normalized());
  };
  auto point_of = [&](const YAML::Node& m, const char* key) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    const auto v = per_dim(require(m, key, ctx), dims, key);
    for (int d = 0; d < dims; ++d) c[d] = v[d];
    return c;
  };

  if (preset == "constant") {
    check_keys(n, {"preset", "value"}, ctx);
    out.setConstant(as<double>(require(n, "value", ctx), "value"));
  } else if (preset == "step") {
    check_keys(n, {"preset", "low", "high", "position", "normal"}, ctx);
    const double lo = get<double>(n, "low", 0.0), hi = get<double>(n, "high", 1.0);
    const auto nrm = normal_of(n);
    const double pos = as<double>(require(n, "position", ctx), "position");
    for (Index p = 0; p < np; ++p) out[p] = nrm.dot(g.position(p)) < pos ? lo : hi;
  } else if (preset == "tophat") {
    check_keys(n, {"preset", "low", "high", "center", "half_width", "normal"}, ctx);
    const double lo = get<double>(n, "low", 0.0), hi = get<double>(n, "high", 1.0);
    const auto nrm = normal_of(n);
    const auto c = point_of(n, "center");
    const double hw = as<double>(require(n, "half_width", ctx), "half_width");
    if (!(hw > 0.0)) fail(n["half_width"], "half_width must be positive");
    for (Index p = 0; p < np; ++p) out[p] = std::abs(nrm.dot(g.position(p) - c)) <= hw ? hi : lo;
  } else if (preset == "gaussian") {
    check_keys(n, {"preset", "amplitude", "background", "center", "sigma"}, ctx);
    const double a = get<double>(n, "amplitude", 1.0), b = get<double>(n, "background", 0.0);
    const auto c = point_of(n, "center");
    const double sigma = as<double>(require(n, "sigma", ctx), "sigma");
    if (!(sigma > 0.0)) fail(n["sigma"], "sigma must be positive");
    for (Index p = 0; p < np; ++p) {
      out[p] = b + a * std::exp(-(g.position(p) - c).squaredNorm() / (2.0 * sigma * sigma));
    }
  } else if (preset == "sinusoid") {
    check_keys(n, {"preset", "amplitude", "background", "modes"}, ctx);
    const double a = get<double>(n, "amplitude", 1.0), b = get<double>(n, "background", 0.0);
    const auto modes = n["modes"] ? per_dim(n["modes"], dims, "modes") : std::vector<double>(dims, 1.0);
    for (Index p = 0; p < np; ++p) {
      const auto x = g.position(p);
      double v = 1.0;
      for (int d = 0; d < dims; ++d) {
        const double x0 = g.coords(d)[0];
        v *= std::sin(2.0 * std::numbers::pi * modes[d] * (x[d] - x0) / grid_length(g, bc, d));
      }
      out[p] = b + a * v;
    }
  } else if (preset == "random") {
    check_keys(n, {"preset", "low", "high", "seed"}, ctx);
    std::optional<std::uint64_t> s = seed;
    if (n["seed"]) s = as<std::uint64_t>(n["seed"], "seed");
    if (!s) fail(n, "random initial data needs a seed (here or at top level)");
    const double lo = get<double>(n, "low", 0.0), hi = get<double>(n, "high", 1.0);
    std::mt19937_64 rng(*s);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (Index p = 0; p < np; ++p) out[p] = dist(rng);
  } else {
    fail(n, "unknown preset '" + preset + "'");
  }
  return out;
}

// --------------------------------------------------------------- operators

Profile parse_profile(const YAML::Node& n) {
  try {
    if (!n) return make_profile("one");
    if (n.IsScalar()) return make_profile(n.as<std::string>());
    check_keys(n, {"name", "params"}, "profile");
    const auto name = as<std::string>(require(n, "name", "profile"), "profile name");
    const auto params = n["params"] ? double_list(n["params"], "profile params") : std::vector<double>{};
    return make_profile(name, params);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(n, e.what());
  }
}

SchemeConfig parse_scheme_block(const YAML::Node& n) {
  SchemeConfig s;
  if (!n) return s;
  if (n.IsScalar()) {
    try {
      s.kind = parse_scheme(n.as<std::string>());
    } catch (const Error& e) {
      fail(n, e.what());
    }
    return s;
  }
  check_keys(n, {"kind", "tol", "max_iter", "preconditioner", "safety_factor"}, "scheme");
  try {
    s.kind = parse_scheme(as<std::string>(require(n, "kind", "scheme"), "scheme kind"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(n["kind"], e.what());
  }
  s.be.tol = get<double>(n, "tol", s.be.tol);
  s.be.max_iter = get<int>(n, "max_iter", s.be.max_iter);
  s.safety_factor = get<double>(n, "safety_factor", s.safety_factor);
  if (const YAML::Node pc = n["preconditioner"]) {
    const auto name = as<std::string>(pc, "preconditioner");
    if (name == "ilu0") {
      s.be.preconditioner = PreconditionerKind::ilu0;
    } else if (name == "jacobi") {
      s.be.preconditioner = PreconditionerKind::jacobi;
    } else if (name == "none") {
      s.be.preconditioner = PreconditionerKind::none;
    } else {
      fail(pc, "unknown preconditioner '" + name + "'");
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(n, e.what());
  }
  return s;
}

PtlConfig parse_ptl_block(const YAML::Node& n) {
  PtlConfig p;
  if (!n) return p;
  if (n.IsScalar()) {
    try {
      p.mode = parse_ptl_mode(n.as<std::string>());
    } catch (const Error& e) {
      fail(n, e.what());
    }
    return p;
  }
  check_keys(n, {"mode", "eps_rel", "floor", "max_cycles", "check_all_points", "refresh_lag_each_cycle"},
             "ptl");
  if (const YAML::Node m = n["mode"]) {
    try {
      p.mode = parse_ptl_mode(as<std::string>(m, "ptl mode"));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(m, e.what());
    }
  }
  p.eps_rel = get<double>(n, "eps_rel", p.eps_rel);
  p.max_cycles = get<long>(n, "max_cycles", p.max_cycles);
  p.check_all_points = get<bool>(n, "check_all_points", p.check_all_points);
  p.refresh_lag_each_cycle = get<bool>(n, "refresh_lag_each_cycle", p.refresh_lag_each_cycle);
  if (const YAML::Node f = n["floor"]) {
    if (f.IsScalar() && f.as<std::string>() == "euler") {
      p.floor_mode = DtFloorMode::clamp_to_euler;
    } else if (f.IsMap()) {
      check_keys(f, {"fraction"}, "ptl floor");
      p.floor_mode = DtFloorMode::clamp_to_fraction;
      p.floor_fraction = as<double>(require(f, "fraction", "ptl floor"), "fraction");
    } else {
      fail(f, "ptl floor is 'euler' or {fraction: f}");
    }
  }
  try {
    p.validate();
  } catch (const Error& e) {
    fail(n, e.what());
  }
  return p;
}

FaceAveraging parse_averaging(const YAML::Node& n) {
  if (!n) return FaceAveraging::arithmetic;
  const auto name = as<std::string>(n, "averaging");
  if (name == "arithmetic") return FaceAveraging::arithmetic;
  if (name == "harmonic") return FaceAveraging::harmonic;
  fail(n, "unknown averaging '" + name + "'");
}

SplitOperator parse_operator(const YAML::Node& n, const ExperimentConfig& cfg, std::size_t index) {
  const auto kind = as<std::string>(require(n, "kind", "operator"), "operator kind");
  const auto name = get<std::string>(n, "name", "op" + std::to_string(index));
  const auto field = as<std::string>(require(n, "field", "operator"), "field");
  const auto field_it = cfg.initial.find(field);
  if (field_it == cfg.initial.end()) fail(n["field"], "operator field '" + field + "' is not defined");
  std::optional<DiffusionOperator> built;
  const Grid& g = *cfg.grid;
  BoundaryCondition bc = n["boundary"] ? parse_boundary(n["boundary"], g.dims()) : cfg.bc;
  auto scalar_field = [&](const char* key, double fallback) {
    Field f(cfg.grid);
    if (n[key]) {
      f.component(0) = fill_preset(n[key], g, bc, cfg.seed, key);
    } else {
      f.values().setConstant(fallback);
    }
    return f;
  };

  try {
    if (kind == "scalar") {
      check_keys(n, {"name", "kind", "field", "nu", "rho", "averaging", "boundary", "scheme", "ptl"},
                 "scalar operator");
      ScalarDiffusionConfig sc{scalar_field("nu", 1.0), scalar_field("rho", 1.0), bc,
                               parse_averaging(n["averaging"])};
      built = DiffusionOperator::scalar(std::move(sc));
    } else if (kind == "aligned") {
      check_keys(n, {"name", "kind", "field", "b_hat", "kappa0", "gamma", "m_p", "k_B", "f_c", "f_m",
                     "rho", "t_floor", "averaging", "boundary", "scheme", "ptl"},
                 "aligned operator");
      if (field_it->second.components() != 1) fail(n["field"], "aligned conduction acts on a scalar field");
      AlignedConductionConfig ac;
      ac.b_hat = Field(cfg.grid, g.dims());
      const auto b = per_dim(require(n, "b_hat", "aligned operator"), g.dims(), "b_hat");
      Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), g.dims());
      if (bv.norm() > 0.0) bv.normalize();
      for (int d = 0; d < g.dims(); ++d) ac.b_hat.component(d).setConstant(bv[d]);
      ac.kappa0 = get<double>(n, "kappa0", ac.kappa0);
      ac.gamma = get<double>(n, "gamma", ac.gamma);
      ac.m_p = get<double>(n, "m_p", ac.m_p);
      ac.k_B = get<double>(n, "k_B", ac.k_B);
      ac.t_floor = get<double>(n, "t_floor", ac.t_floor);
      ac.f_c = parse_profile(n["f_c"]);
      ac.f_m = parse_profile(n["f_m"]);
      ac.rho = scalar_field("rho", 1.0);
      ac.bc = bc;
      ac.averaging = parse_averaging(n["averaging"]);
      built = DiffusionOperator::aligned(std::move(ac));
    } else {
      fail(n["kind"], "unknown operator kind '" + kind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(n, e.what());
  }
  return SplitOperator{name, field, std::move(*built), parse_scheme_block(n["scheme"]),
                       parse_ptl_block(n["ptl"])};
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
  }
  if (!root || !root.IsMap()) throw ConfigError(0, "config must be a YAML mapping");
  check_keys(root, {"grid", "boundary", "fields", "operators", "outer_dt", "n_outer_steps", "seed", "output"},
             "config");

  ExperimentConfig cfg;
  if (root["seed"]) cfg.seed = as<std::uint64_t>(root["seed"], "seed");
  cfg.grid = parse_grid(require(root, "grid", "config"));
  cfg.bc = parse_boundary(root["boundary"], cfg.grid->dims());

  const YAML::Node fields = require(root, "fields", "config");
  if (!fields.IsMap() || fields.size() == 0) fail(fields, "fields must map names to initial data");
  for (const auto& kv : fields) {
    const auto name = kv.first.as<std::string>();
    const YAML::Node spec = kv.second;
    int comps = 1;
    YAML::Node init = spec;
    if (spec.IsMap() && spec["init"]) {
      check_keys(spec, {"components", "init"}, "field '" + name + "'");
      comps = get<int>(spec, "components", 1);
      if (comps < 1) fail(spec["components"], "components must be at least 1");
      init = spec["init"];
    }
    Field f(cfg.grid, comps);
    const Vector v = fill_preset(init, *cfg.grid, cfg.bc, cfg.seed, "field '" + name + "'");
    for (int c = 0; c < comps; ++c) f.component(c) = v;
    cfg.initial.emplace(name, std::move(f));
  }

  if (const YAML::Node ops = root["operators"]) {
    if (!ops.IsSequence()) fail(ops, "operators must be a list");
    for (std::size_t i = 0; i < ops.size(); ++i) cfg.operators.push_back(parse_operator(ops[i], cfg, i));
  }

  const YAML::Node odt = require(root, "outer_dt", "config");
  if (odt.IsMap()) {
    check_keys(odt, {"euler_multiple"}, "outer_dt");
    cfg.outer_dt = {as<double>(require(odt, "euler_multiple", "outer_dt"), "euler_multiple"), true};
  } else {
    cfg.outer_dt = {as<double>(odt, "outer_dt"), false};
  }
  if (!(cfg.outer_dt.value > 0.0) || !std::isfinite(cfg.outer_dt.value)) {
    fail(odt, "outer_dt must be positive and finite");
  }
  cfg.n_outer_steps = get<int>(root, "n_outer_steps", 1);
  if (cfg.n_outer_steps < 1) fail(root["n_outer_steps"], "n_outer_steps must be at least 1");
  cfg.output_dir = get<std::string>(root, "output", cfg.output_dir);
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(0, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_experiment(ss.str());
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res;
  res.state = cfg.initial;
  for (const auto& op : cfg.operators) res.operator_names.push_back(op.name);
  res.reports.resize(cfg.operators.size());

  res.outer_dt = cfg.outer_dt.value;
  if (cfg.outer_dt.euler_multiple) {
    double limit = std::numeric_limits<double>::infinity();
    for (const auto& op : cfg.operators) {
      limit = std::min(limit, estimate_euler_dt(op.op, cfg.initial.at(op.field)) * op.scheme.safety_factor);
    }
    if (!std::isfinite(limit)) throw ConfigError(0, "outer_dt.euler_multiple needs a non-zero operator");
    res.outer_dt = cfg.outer_dt.value * limit;
  }

  for (int step = 0; step < cfg.n_outer_steps; ++step) {
    SplitResult sr = split_advance(cfg.operators, std::move(res.state), res.outer_dt, step);
    res.state = std::move(sr.state);
    for (std::size_t i = 0; i < sr.reports.size(); ++i) res.reports[i].append(sr.reports[i]);
  }
  return res;
}

void write_experiment_outputs(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string coords = (fs::path(dir) / "coords.csv").string();
  for (const auto& [name, field] : result.state) {
    write_field_csv(field, (fs::path(dir) / (name + "_final.csv")).string(), coords);
  }
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    result.reports[i].write_csv((fs::path(dir) / ("report_" + result.operator_names[i] + ".csv")).string());
  }
}

}  // namespace paracycle
