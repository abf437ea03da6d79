// Scenario drivers for the command-line tool.  Each scenario reads its
// parameters from a JSON object and writes CSV (or JSON) to a stream.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qinstr/color_code.hpp"
#include "qinstr/detection.hpp"
#include "qinstr/io.hpp"
#include "qinstr/noise.hpp"
#include "qinstr/parallel.hpp"
#include "qinstr/qnd.hpp"
#include "qinstr/tomography.hpp"

namespace qinstr::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  std::string scenario;
  json params = json::object();
  std::uint64_t seed = 1;
  std::optional<std::int64_t> trials;
  std::optional<std::int64_t> shots;
  std::string build = "unknown";
};

struct ScenarioResult {
  bool solver_failure = false;
};

namespace detail {

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline std::vector<double> grid(const json& j, const char* key, std::vector<double> fallback) {
  std::vector<double> g = get(j, key, fallback);
  if (g.empty()) throw ConfigError(std::string("config key '") + key + "': grid is empty");
  for (double v : g)
    if (!std::isfinite(v)) throw ConfigError(std::string("config key '") + key + "': non-finite value");
  return g;
}

inline std::vector<double> probability_grid(const json& j, const char* key, std::vector<double> fallback) {
  auto g = grid(j, key, std::move(fallback));
  for (double v : g)
    if (v < 0.0 || v > 1.0) throw ConfigError(std::string("config key '") + key + "': value outside [0, 1]");
  return g;
}

inline json effective_config(const ScenarioConfig& c) {
  json j = c.params;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  if (c.trials) j["trials"] = *c.trials;
  if (c.shots) j["shots"] = *c.shots;
  return j;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Least-squares slope of log(y) against log(x) over points with y > 0.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline QecConfig qec_base(const ScenarioConfig& c) {
  const json& p = c.params;
  QecConfig q;
  q.noise = io::noise_from_json(p.value("noise", json::object()));
  if (p.contains("q") && !p["q"].is_null()) q.q = get(p, "q", 0.0);
  q.trials = c.trials.value_or(get<std::int64_t>(p, "trials", 10000));
  q.seed = c.seed;
  q.mode = mode_from_name(get<std::string>(p, "mode", "clifford"));
  q.loss = loss_model_from_name(get<std::string>(p, "loss_model", "rotation"));
  q.readout = readout_from_name(get<std::string>(p, "readout", "decoded"));
  q.basis = basis_from_name(get<std::string>(p, "basis", "0"));
  q.x_stabilizers_first = get(p, "x_stabilizers_first", true);
  return q;
}

}  // namespace detail

// ---- tomo-compare ----

inline ScenarioResult tomo_compare(const ScenarioConfig& c, std::ostream& os) {
  const auto p_loss = detail::probability_grid(c.params, "p_loss", {0.0, 0.1, 0.3, 0.5, 0.7, 0.9});
  const std::int64_t shots = c.shots.value_or(detail::get<std::int64_t>(c.params, "shots", 200));
  const int repeats = detail::get(c.params, "repeats", 1);
  if (shots < 1 || repeats < 1) throw ConfigError("tomo-compare: shots and repeats must be >= 1");
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);

  struct Row {
    double tvd_c = NAN, tvd_u = NAN;
    std::string error;
  };
  const size_t n = p_loss.size() * size_t(repeats);
  std::vector<Row> rows(n);
  parallel_for(n, [&](size_t k) {
    const double pl = p_loss[k / repeats];
    const ChoiOperator truth = choi_of_map({LinearMap(Operator(no_loss_qubit(angle_from_p_loss(pl))))});
    const auto recs = sample_counts(d, predict_probabilities(truth, d), shots, c.seed + 7919 * k);
    Row& r = rows[k];
    for (bool constrained : {true, false}) {
      double tvd = NAN;
      try {
        tvd = total_variation_distance(d, recs, predict_probabilities(reconstruct(d, recs, constrained).choi, d));
      } catch (const NonConvergence& e) {
        tvd = total_variation_distance(d, recs, predict_probabilities(e.last_iterate, d));
        r.error += constrained ? "constrained:nonconvergence;" : "unconstrained:nonconvergence;";
      }
      (constrained ? r.tvd_c : r.tvd_u) = tvd;
    }
  });

  io::write_comment(os, detail::effective_config(c), c.build);
  os << "p_loss,repeat,shots,tvd_constrained,tvd_unconstrained,error\n";
  ScenarioResult res;
  for (size_t k = 0; k < n; ++k) {
    os << detail::fmt(p_loss[k / repeats]) << ',' << k % repeats << ',' << shots << ',' << detail::fmt(rows[k].tvd_c)
       << ',' << detail::fmt(rows[k].tvd_u) << ',' << rows[k].error << '\n';
    if (!rows[k].error.empty()) res.solver_failure = true;
  }
  return res;
}

// ---- bloch-sweep ----

inline ScenarioResult bloch_sweep(const ScenarioConfig& c, std::ostream& os) {
  const auto p_loss = detail::probability_grid(c.params, "p_loss", {0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const std::map<std::string, Vector> inputs = [] {
    const double r = 1.0 / std::sqrt(2.0);
    std::map<std::string, Vector> m;
    m["plus"] = Vector::Constant(2, r);
    Vector pi(2);
    pi << r, kI * r;
    m["plus_i"] = pi;
    m["zero"] = basis_ket(2, 0);
    m["one"] = basis_ket(2, 1);
    return m;
  }();
  const auto names = detail::get<std::vector<std::string>>(c.params, "inputs", {"plus", "plus_i", "one"});
  io::write_comment(os, detail::effective_config(c), c.build);
  os << "p_loss,input,x,y,z\n";
  for (const auto& name : names) {
    auto it = inputs.find(name);
    if (it == inputs.end()) throw ConfigError("bloch-sweep: unknown input '" + name + "'");
    for (double pl : p_loss) {
      std::string cols = ",,";
      try {
        Bloch b = bloch_vector_no_loss(it->second, angle_from_p_loss(pl));
        cols = detail::fmt(b[0]) + ',' + detail::fmt(b[1]) + ',' + detail::fmt(b[2]);
      } catch (const ArgumentError&) {
        cols = "nan,nan,nan";  // no-loss branch has zero weight
      }
      os << detail::fmt(pl) << ',' << name << ',' << cols << '\n';
    }
  }
  return {};
}

// ---- erasure-sweep ----

inline ChoiOperator erasure_no_loss_choi(double phi) {
  const Matrix k = (no_loss_kraus(phi, 1) * no_loss_kraus(phi, 0)).topLeftCorner(2, 2);
  return choi_of_map({LinearMap(Operator(k))});
}

inline ScenarioResult erasure_sweep(const ScenarioConfig& c, std::ostream& os) {
  const auto p_loss = detail::probability_grid(c.params, "p_loss", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  const double p_e = detail::get(c.params, "p_e", 0.09);
  const double p_spam = detail::get(c.params, "p_spam", 0.03);
  const std::int64_t shots = c.shots.value_or(detail::get<std::int64_t>(c.params, "shots", 0));
  const ChoiOperator identity = choi_of_map({LinearMap(Operator(Matrix(Matrix::Identity(2, 2))))});
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);

  struct Row {
    double p_survive = 0, f_analytic = 0, f_model = 0, f_sampled = NAN;
    std::string error;
  };
  std::vector<Row> rows(p_loss.size());
  parallel_for(p_loss.size(), [&](size_t k) {
    const double phi = angle_from_p_loss(p_loss[k]);
    const ChoiOperator ch = erasure_no_loss_choi(phi);
    Row& r = rows[k];
    r.p_survive = ch.trace() / 2.0;
    r.f_analytic = r.p_survive > 0.0 ? choi_fidelity(ch, identity) : NAN;
    r.f_model = choi_fidelity(fidelity_decay_model(p_loss[k], p_e, p_spam, identity), identity);
    if (shots > 0 && r.p_survive > 0.0) {
      const auto recs = sample_counts(d, predict_probabilities(ch, d), shots, c.seed + 104729 * k);
      try {
        r.f_sampled = choi_fidelity(reconstruct(d, recs, false).choi, identity);
      } catch (const NonConvergence& e) {
        r.f_sampled = choi_fidelity(e.last_iterate, identity);
        r.error = "nonconvergence";
      }
    }
  });

  io::write_comment(os, detail::effective_config(c), c.build);
  os << "p_loss,p_no_loss,fidelity_analytic,fidelity_decay_model,fidelity_sampled,error\n";
  ScenarioResult res;
  for (size_t k = 0; k < rows.size(); ++k) {
    const Row& r = rows[k];
    os << detail::fmt(p_loss[k]) << ',' << detail::fmt(r.p_survive) << ',' << detail::fmt(r.f_analytic) << ','
       << detail::fmt(r.f_model) << ',' << detail::fmt(r.f_sampled) << ',' << r.error << '\n';
    if (!r.error.empty()) res.solver_failure = true;
  }
  return res;
}

// ---- ghz-imbalance ----

inline ScenarioResult ghz_imbalance_sweep(const ScenarioConfig& c, std::ostream& os) {
  const auto p_loss = detail::probability_grid(c.params, "p_loss", {0.0, 0.25, 0.5, 0.75, 0.9});
  const int n = detail::get(c.params, "qubits", 4);
  if (n < 1 || n > 12) throw ConfigError("ghz-imbalance: qubits must lie in 1..12");
  io::write_comment(os, detail::effective_config(c), c.build);
  os << "p_loss,imbalance,one_minus_p_loss\n";
  for (double pl : p_loss) {
    double v = pl < 1.0 ? ghz_imbalance(n, angle_from_p_loss(pl)) : 0.0;
    os << detail::fmt(pl) << ',' << detail::fmt(v) << ',' << detail::fmt(1.0 - pl) << '\n';
  }
  return {};
}

// ---- noise-fit ----

inline std::vector<NoiseModel> parse_models(const json& j) {
  std::vector<NoiseModel> out;
  if (!j.is_array()) throw ConfigError("noise-fit: 'models' must be an array of arrays");
  for (const auto& m : j) {
    NoiseModel model;
    try {
      for (const auto& name : m) model.insert(component_from_name(name.get<std::string>()));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("noise-fit: bad model entry: ") + e.what());
    }
    out.push_back(model);
  }
  return out;
}

inline json default_models() {
  return json::array({json::array({"depol"}), json::array({"deph"}), json::array({"corr"}),
                      json::array({"corr", "depol", "deph"})});
}

inline ScenarioResult noise_fit(const ScenarioConfig& c, std::ostream& os) {
  json targets = c.params.value("targets", json::array({{{"label", "default"}, {"p_loss", 0.0},
                                                         {"noise", {{"p_corr", 0.045}}}}}));
  if (!targets.is_array() || targets.empty()) throw ConfigError("noise-fit: 'targets' must be a nonempty array");
  const std::vector<NoiseModel> models = parse_models(c.params.value("models", default_models()));

  struct Item {
    std::string label;
    double p_loss;
    NoiseParams truth;
  };
  std::vector<Item> items;
  for (const auto& t : targets) {
    Item it{detail::get<std::string>(t, "label", ""), detail::get(t, "p_loss", 0.0),
            io::noise_from_json(t.value("noise", json::object()))};
    if (it.p_loss < 0.0 || it.p_loss > 1.0) throw ConfigError("noise-fit: p_loss outside [0, 1]");
    items.push_back(it);
  }

  std::vector<json> reports(items.size());
  std::vector<char> failed(items.size(), 0);
  parallel_for(items.size(), [&](size_t k) {
    const ChoiOperator ideal = ideal_qnd_choi(angle_from_p_loss(items[k].p_loss));
    const ChoiOperator target = noisy_choi_target(ideal, noise_channel(items[k].truth));
    json fits = json::array();
    const FidelityTo fid(target.matrix);
    const double f_ideal = fid(ideal.matrix);
    std::vector<NoiseModel> nonempty;
    for (const auto& m : models)
      if (!m.empty()) nonempty.push_back(m);
    std::vector<NoiseFit> res;
    try {
      res = fit_noise_models(target, ideal, nonempty);
    } catch (const FitNonConvergence& e) {
      failed[k] = 1;
    }
    size_t r = 0;
    for (const auto& m : models) {
      if (m.empty()) {
        fits.push_back({{"model", json::array()}, {"params", json::object()}, {"fidelity_ideal", f_ideal},
                        {"fidelity_model", f_ideal}});
        continue;
      }
      if (r < res.size()) fits.push_back(io::to_json(res[r++]));
      else fits.push_back({{"model", json::array()}, {"error", "nonconvergence"}});
    }
    reports[k] = {{"label", items[k].label}, {"p_loss", items[k].p_loss}, {"truth", io::to_json(items[k].truth)},
                  {"fidelity_ideal", f_ideal}, {"fits", fits}};
  });

  json out = {{"config", detail::effective_config(c)}, {"build", c.build}, {"targets", reports}};
  os << out.dump(2) << '\n';
  ScenarioResult res;
  for (char f : failed) res.solver_failure |= bool(f);
  return res;
}

// ---- QEC scenarios ----

inline ScenarioResult qec_sweep(const ScenarioConfig& c, std::ostream& os) {
  const QecConfig base = detail::qec_base(c);
  const auto p_loss = detail::probability_grid(c.params, "p_loss",
                                               {0.01, 0.02, 0.03, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4});
  const auto p_corr = detail::probability_grid(c.params, "p_corr", {0.0, 0.023, 0.045});
  std::vector<QecConfig> cfgs;
  for (double pc : p_corr)
    for (double pl : p_loss) {
      QecConfig q = base;
      q.noise.alpha = angle_from_p_loss(pc);
      q.p_loss = pl;
      if (!c.params.contains("q")) q.q.reset();  // q follows p_corr
      cfgs.push_back(q);
    }
  std::vector<QecResult> res(cfgs.size());
  for (size_t k = 0; k < cfgs.size(); ++k) res[k] = run_qec_cycle(cfgs[k]);

  io::write_comment(os, detail::effective_config(c), c.build);
  os << io::kQecHeader << ",analytic_ideal\n";
  for (size_t k = 0; k < cfgs.size(); ++k) {
    std::ostringstream row;
    io::write_qec_row(row, cfgs[k], res[k]);
    std::string s = row.str();
    s.pop_back();
    os << s << ',' << detail::fmt(1.0 - analytic_success(cfgs[k].p_loss)) << '\n';
  }
  for (size_t i = 0; i < p_corr.size(); ++i) {
    std::vector<std::pair<double, double>> curve;
    for (size_t j = 0; j < p_loss.size(); ++j)
      curve.push_back({p_loss[j], res[i * p_loss.size() + j].logical_error_rate});
    BeneficialRegion b = beneficial_region(curve);
    os << "# beneficial p_corr=" << detail::fmt(p_corr[i]) << ' '
       << (b.found ? "[" + detail::fmt(b.lower) + ", " + detail::fmt(b.upper) + "]" : std::string("none")) << '\n';
  }
  return {};
}

inline ScenarioResult qec_scaling(const ScenarioConfig& c, std::ostream& os) {
  QecConfig base = detail::qec_base(c);
  base.p_loss = 0.0;
  if (!c.params.contains("q")) base.q = 0.0;
  const auto p_single = detail::probability_grid(c.params, "p_single", {0.001, 0.00178, 0.00316, 0.00562, 0.01});
  const auto p_corr = detail::probability_grid(c.params, "p_corr", {0.02, 0.0356, 0.0632, 0.112, 0.2});
  const auto modes = detail::get<std::vector<std::string>>(c.params, "modes", {"clifford"});

  io::write_comment(os, detail::effective_config(c), c.build);
  os << io::kQecHeader << ",sweep\n";
  std::vector<std::string> fits;
  for (const auto& mname : modes) {
    QecConfig m = base;
    m.mode = mode_from_name(mname);
    for (const char* sweep : {"single", "corr"}) {
      const bool single = std::string(sweep) == "single";
      const auto& xs = single ? p_single : p_corr;
      std::vector<double> ys;
      for (double x : xs) {
        QecConfig q = m;
        q.noise = single ? NoiseParams::from_rates(0.0, x) : NoiseParams::from_rates(x, 0.0);
        QecResult r = run_qec_cycle(q);
        ys.push_back(r.logical_error_rate);
        std::ostringstream row;
        io::write_qec_row(row, q, r);
        std::string s = row.str();
        s.pop_back();
        os << s << ',' << sweep << '\n';
      }
      fits.push_back("# slope mode=" + mname + " sweep=" + sweep + " value=" + detail::fmt(detail::loglog_slope(xs, ys)));
    }
  }
  for (const auto& f : fits) os << f << '\n';
  return {};
}

inline ScenarioResult qec_modes(const ScenarioConfig& c, std::ostream& os) {
  QecConfig base = detail::qec_base(c);
  if (!c.params.contains("noise")) base.noise = NoiseParams::from_rates(0.045, 2.47e-4);
  if (!c.params.contains("loss_model")) base.loss = LossModel::bernoulli;
  const auto p_loss = detail::probability_grid(c.params, "p_loss", {0.0, 0.02, 0.05, 0.1, 0.2, 0.3});
  const ModeComparison cmp = compare_coherent_incoherent(base, p_loss);

  io::write_comment(os, detail::effective_config(c), c.build);
  os << io::kQecHeader << ",relative_deviation\n";
  for (const auto& pt : cmp.points) {
    for (const QecResult* r : {&pt.coherent, &pt.clifford}) {
      QecConfig q = base;
      q.p_loss = pt.p_loss;
      q.mode = r == &pt.coherent ? QecMode::coherent : QecMode::clifford;
      std::ostringstream row;
      io::write_qec_row(row, q, *r);
      std::string s = row.str();
      s.pop_back();
      os << s << ',' << detail::fmt(pt.relative_deviation) << '\n';
    }
  }
  os << "# max_relative_deviation=" << detail::fmt(cmp.max_relative_deviation) << '\n';
  return {};
}

using ScenarioFn = std::function<ScenarioResult(const ScenarioConfig&, std::ostream&)>;

inline const std::map<std::string, ScenarioFn>& registry() {
  static const std::map<std::string, ScenarioFn> r{
      {"tomo-compare", tomo_compare}, {"bloch-sweep", bloch_sweep}, {"erasure-sweep", erasure_sweep},
      {"ghz-imbalance", ghz_imbalance_sweep}, {"noise-fit", noise_fit}, {"qec-sweep", qec_sweep},
      {"qec-scaling", qec_scaling}, {"qec-modes", qec_modes}};
  return r;
}

// Runs a scenario; configuration problems surface as ConfigError.
inline ScenarioResult run_scenario(const ScenarioConfig& c, std::ostream& os) {
  auto it = registry().find(c.scenario);
  if (it == registry().end()) throw ConfigError("unknown scenario '" + c.scenario + "'");
  if (!c.params.is_object()) throw ConfigError("config must be a JSON object");
  try {
    return it->second(c, os);
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace qinstr::cli
