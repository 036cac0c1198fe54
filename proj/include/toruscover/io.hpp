#pragma once

// Deterministic report emission: CSV tables (shortest round-trip number
// formatting, frozen column schemas with a schema_version column), ordered
// JSON reports, and the plain-text inequality ledger. Identical reports
// serialize to identical bytes.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toruscover/experiments.hpp"
#include "toruscover/pointset.hpp"
#include "toruscover/version.hpp"

namespace toruscover::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_input("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail_resource("failed writing " + path.string());
}

inline std::string csv_table(const std::vector<std::string>& columns,
                             const std::vector<Vec>& rows) {
  std::string s;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) s += ',';
    s += columns[c];
  }
  s += ",schema_version\n";
  for (const auto& row : rows) {
    require_input(row.size() == columns.size(), "csv row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) s += ',';
      s += format_double(row[c]);
    }
    s += ',';
    s += std::to_string(kCsvSchemaVersion);
    s += '\n';
  }
  return s;
}

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& columns,
                      const std::vector<Vec>& rows) {
  write_text_file(path, csv_table(columns, rows));
}

inline std::string points_csv(const torus::PointSet& ps) {
  const int n = ps.dim();
  std::string s = "dim,count,schema_version\n";
  s += std::to_string(n) + "," + std::to_string(ps.size()) + "," +
       std::to_string(kCsvSchemaVersion) + "\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto p = ps.point(i);
    for (int j = 0; j < n; ++j) {
      if (j) s += ',';
      s += format_double(p[j]);
    }
    s += '\n';
  }
  return s;
}

// ----------------------------------------------------------------------------
// Report -> JSON
// ----------------------------------------------------------------------------

inline json to_json(const experiments::CoverReport& r) {
  json j;
  j["intensity"] = r.intensity;
  j["trials"] = r.trials;
  j["covered"] = r.covered;
  j["uncovered"] = r.uncovered;
  j["undetermined"] = r.undetermined;
  j["cover_frac"] = r.cover_frac;
  j["cover_lo"] = r.cover_lo;
  j["cover_hi"] = r.cover_hi;
  j["mean_density"] = r.mean_density;
  j["body_volume"] = r.body_volume;
  j["torus_volume"] = r.torus_volume;
  j["m_ratio"] = r.m_ratio;
  j["resolved_h"] = r.resolved_h;
  j["net_points"] = r.net_points;
  return j;
}

inline std::vector<std::string> scan_columns() {
  return {"intensity",   "trials",       "covered",         "uncovered",
          "undetermined", "cover_frac",  "cover_lo",        "cover_hi",
          "isotonic",    "mean_density", "mean_mult_lower", "mean_mult_upper"};
}

inline std::vector<Vec> scan_rows(const experiments::ScanTable& t) {
  std::vector<Vec> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows)
    rows.push_back({r.intensity, double(r.trials), double(r.covered),
                    double(r.uncovered), double(r.undetermined), r.cover_frac,
                    r.cover_lo, r.cover_hi, r.isotonic, r.mean_density,
                    r.mean_mult_lower, r.mean_mult_upper});
  return rows;
}

inline json to_json(const experiments::ScanTable& t) {
  json j;
  j["threshold"] = t.threshold;
  j["ci_lo"] = t.ci_lo;
  j["ci_hi"] = t.ci_hi;
  j["extrapolated"] = t.extrapolated;
  j["undetermined_warning"] = t.undetermined_warning;
  j["worst_undetermined_frac"] = t.worst_undetermined_frac;
  j["threshold_normalized"] = t.threshold_normalized;
  j["body_volume"] = t.body_volume;
  j["torus_volume"] = t.torus_volume;
  j["m_ratio"] = t.m_ratio;
  j["resolved_h"] = t.resolved_h;
  j["net_points"] = t.net_points;
  j["mult_trials_used"] = t.mult_trials_used;
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row;
    row["intensity"] = r.intensity;
    row["trials"] = r.trials;
    row["covered"] = r.covered;
    row["uncovered"] = r.uncovered;
    row["undetermined"] = r.undetermined;
    row["cover_frac"] = r.cover_frac;
    row["cover_lo"] = r.cover_lo;
    row["cover_hi"] = r.cover_hi;
    row["isotonic"] = r.isotonic;
    row["mean_density"] = r.mean_density;
    row["mean_mult_lower"] = r.mean_mult_lower;
    row["mean_mult_upper"] = r.mean_mult_upper;
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

inline json to_json(const experiments::MultiplicityProfile& r) {
  json j;
  j["intensity"] = r.intensity;
  j["lambda"] = r.lambda;
  j["trials"] = r.trials;
  j["histogram"] = r.histogram;
  j["poisson_reference"] = r.poisson_reference;
  j["total_variation"] = r.total_variation;
  j["mean_density"] = r.mean_density;
  j["sd_density"] = r.sd_density;
  j["expected_density"] = r.expected_density;
  j["mean_multiplicity"] = r.mean_multiplicity;
  j["mult_trials_used"] = r.mult_trials_used;
  j["mult_upper_histogram"] = r.mult_upper_histogram;
  j["mult_lower_histogram"] = r.mult_lower_histogram;
  j["reference_point"] = r.reference_point;
  return j;
}

inline json to_json(const experiments::EventReport& r) {
  json j;
  j["eps"] = r.eps;
  j["mu"] = r.mu;
  j["beta"] = r.beta;
  j["saturation_threshold"] = r.saturation_threshold;
  j["neighbour_cap"] = r.neighbour_cap;
  j["packing_fine"] = r.packing_fine;
  j["packing_coarse"] = r.packing_coarse;
  j["assignment_max_distance"] = r.assignment_max_distance;
  j["trials"] = r.trials;
  j["e1"] = {{"count", r.e1_count}, {"lo", r.e1_lo}, {"hi", r.e1_hi}};
  j["e2"] = {{"count", r.e2_count}, {"lo", r.e2_lo}, {"hi", r.e2_hi}};
  j["e3"] = {{"count", r.e3_count}, {"lo", r.e3_lo}, {"hi", r.e3_hi}};
  j["consistency_violations"] = r.consistency_violations;
  j["note"] = r.note;
  return j;
}

inline json to_json(const experiments::SecondMomentReport& r) {
  json j;
  j["target_count"] = r.target_count;
  j["intensity"] = r.intensity;
  j["rho_eff"] = r.rho_eff;
  j["delta_split"] = r.delta_split;
  j["isotropic_constant"] = r.isotropic_constant;
  j["analytic_mean"] = r.analytic_mean;
  j["analytic_variance"] = r.analytic_variance;
  j["analytic_second_moment"] = r.analytic_second_moment;
  j["sigma1"] = r.sigma1;
  j["sigma2"] = r.sigma2;
  j["variance_identity_residual"] = r.variance_identity_residual;
  j["analytic_bound"] = r.analytic_bound;
  j["suggested_intensity"] = r.suggested_intensity;
  j["trials"] = r.trials;
  j["empirical_mean"] = r.empirical_mean;
  j["empirical_variance"] = r.empirical_variance;
  j["empirical_p0"] = r.empirical_p0;
  j["mean_z"] = r.mean_z;
  j["variance_z"] = r.variance_z;
  j["p0_slack"] = r.p0_slack;
  return j;
}

inline json to_json(const experiments::LemmaSuiteReport& r) {
  json j;
  j["all_pass"] = r.all_pass;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json e;
    e["name"] = row.name;
    e["instances"] = row.instances;
    e["worst_margin"] = row.worst_margin;
    e["pass"] = row.pass;
    e["detail"] = row.detail;
    rows.push_back(e);
  }
  j["rows"] = rows;
  return j;
}

inline std::string lemma_ledger_text(const experiments::LemmaSuiteReport& r) {
  std::string s;
  for (const auto& row : r.rows) {
    s += row.pass ? "PASS " : "FAIL ";
    s += row.name;
    s += "  worst_margin=";
    s += format_double(row.worst_margin);
    s += "  [";
    s += row.instances;
    s += "]";
    if (!row.detail.empty()) {
      s += "  ";
      s += row.detail;
    }
    s += '\n';
  }
  s += r.all_pass ? "ALL PASS\n" : "SUITE FAILED\n";
  return s;
}

}  // namespace toruscover::io
