// JSON and CSV serialization of operators, records, fit reports and QEC rows.
#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qinstr/color_code.hpp"
#include "qinstr/noise.hpp"
#include "qinstr/tomography.hpp"

namespace qinstr::io {

using nlohmann::json;

inline json to_json(const Operator& op) {
  json re = json::array(), im = json::array();
  const Matrix& m = op.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ri = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return {{"shape", op.shape().factors()}, {"re", re}, {"im", im}};
}

inline Operator operator_from_json(const json& j) {
  try {
    HilbertShape shape(j.at("shape").get<std::vector<int>>());
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const Eigen::Index d = shape.dim();
    if (Eigen::Index(re.size()) != d || Eigen::Index(im.size()) != d)
      throw ArgumentError("operator JSON: row count does not match shape");
    Matrix m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      if (Eigen::Index(re[r].size()) != d || Eigen::Index(im[r].size()) != d)
        throw ArgumentError("operator JSON: column count does not match shape");
      for (Eigen::Index c = 0; c < d; ++c) m(r, c) = cplx(re[r][c].get<double>(), im[r][c].get<double>());
    }
    return Operator(std::move(shape), std::move(m));
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("operator JSON: ") + e.what());
  }
}

inline json to_json(const ChoiOperator& c) {
  json j = to_json(Operator(HilbertShape({c.in_dim, c.out_dim}), c.matrix));
  j["in_dim"] = c.in_dim;
  j["out_dim"] = c.out_dim;
  return j;
}

inline constexpr const char* kRecordHeader = "prep_index,setting_index,effect_index,shots,count";

inline void write_records(std::ostream& os, const std::vector<MeasurementRecord>& recs) {
  os << kRecordHeader << '\n';
  for (const auto& r : recs)
    os << r.prep_index << ',' << r.setting_index << ',' << r.effect_index << ',' << r.shots << ',' << r.count << '\n';
}

inline std::vector<MeasurementRecord> read_records(std::istream& is) {
  std::vector<MeasurementRecord> out;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kRecordHeader) throw ArgumentError("records CSV: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::istringstream ss(line);
    MeasurementRecord r;
    char c1, c2, c3, c4;
    if (!(ss >> r.prep_index >> c1 >> r.setting_index >> c2 >> r.effect_index >> c3 >> r.shots >> c4 >> r.count) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw ArgumentError("records CSV: malformed line '" + line + "'");
    out.push_back(r);
  }
  return out;
}

inline json to_json(const NoiseParams& p) {
  return {{"p_corr", p.p_corr()}, {"p_single", p.p_single()}, {"p_depol", p.p_depol}, {"p_deph", p.p_deph},
          {"alpha", p.alpha},     {"beta", p.beta}};
}

inline NoiseParams noise_from_json(const json& j) {
  try {
    return NoiseParams::from_rates(j.value("p_corr", 0.0), j.value("p_single", 0.0), j.value("p_depol", 0.0),
                                   j.value("p_deph", 0.0));
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("noise JSON: ") + e.what());
  }
}

inline json to_json(const NoiseFit& f) {
  json model = json::array();
  for (NoiseComponent c : f.model) model.push_back(component_name(c));
  json params = json::object();
  for (NoiseComponent c : f.model) params[component_name(c)] = component_rate(f.params, c);
  return {{"model", model}, {"params", params}, {"fidelity_ideal", f.fidelity_ideal},
          {"fidelity_model", f.fidelity_model}};
}

inline constexpr const char* kQecHeader = "p_loss,q,p_corr,p_single,mode,trials,logical_error_rate,stderr";

inline void write_qec_row(std::ostream& os, const QecConfig& cfg, const QecResult& r) {
  os << cfg.p_loss << ',' << cfg.stabilizer_flip() << ',' << cfg.noise.p_corr() << ',' << cfg.noise.p_single() << ','
     << mode_name(cfg.mode) << ',' << r.trials << ',' << r.logical_error_rate << ',' << r.stderr_ << '\n';
}

// "# config=<json> build=<describe>"
inline void write_comment(std::ostream& os, const json& config, const std::string& build) {
  os << "# config=" << config.dump() << " build=" << build << '\n';
}

}  // namespace qinstr::io
