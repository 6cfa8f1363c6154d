#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agwp/flow.hpp"
#include "agwp/grid.hpp"
#include "agwp/invariants.hpp"
#include "agwp/vanvleck.hpp"

namespace agwp {

using Json = nlohmann::json;

/// Shortest round-trip decimal form (17 significant digits), used for
/// every number in CSV output so runs are byte-comparable.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Minimal RFC 4180 writer: comma separators, CRLF line ends, header row.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error("CsvWriter: cannot open " + path.string());
  }

  void header(const std::vector<std::string>& names) { row_strings(names); }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    row_strings(cells);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

/// Trajectory CSV: t, q, p, S, Re/Im A and B entries row-major, Re/Im
/// log det A; one row per output time.
inline void write_trajectory_csv(const Trajectory& tr,
                                 const std::filesystem::path& path) {
  const int d = tr.dim();
  CsvWriter csv(path);
  std::vector<std::string> names{"t"};
  for (int j = 0; j < d; ++j) names.push_back("q" + std::to_string(j));
  for (int j = 0; j < d; ++j) names.push_back("p" + std::to_string(j));
  names.push_back("S");
  for (const char* m : {"A", "B"})
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        names.push_back(std::string("Re") + m + std::to_string(r) +
                        std::to_string(c));
        names.push_back(std::string("Im") + m + std::to_string(r) +
                        std::to_string(c));
      }
  names.push_back("Re_log_det_A");
  names.push_back("Im_log_det_A");
  csv.header(names);

  for (const CharacteristicState& s : tr.states()) {
    std::vector<double> row{s.t};
    for (int j = 0; j < d; ++j) row.push_back(s.q[j]);
    for (int j = 0; j < d; ++j) row.push_back(s.p[j]);
    row.push_back(s.S);
    for (const CMat* m : {&s.A, &s.B})
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          row.push_back((*m)(r, c).real());
          row.push_back((*m)(r, c).imag());
        }
    row.push_back(s.log_det_A.real());
    row.push_back(s.log_det_A.imag());
    csv.row(row);
  }
}

/// GridFunction CSV. For d = 1: x, Re, Im, |psi|^2. For d >= 2 the values
/// go out flat row-major with a JSON sidecar describing box and shape.
inline void write_grid_csv(const GridFunction& f,
                           const std::filesystem::path& path) {
  CsvWriter csv(path);
  if (f.dim() == 1) {
    csv.header({"x", "re", "im", "abs2"});
    for (Eigen::Index i = 0; i < f.size(); ++i)
      csv.row({f.coord(0, i), f.values()[i].real(), f.values()[i].imag(),
               std::norm(f.values()[i])});
    return;
  }
  csv.header({"index", "re", "im", "abs2"});
  for (Eigen::Index i = 0; i < f.size(); ++i)
    csv.row({static_cast<double>(i), f.values()[i].real(),
             f.values()[i].imag(), std::norm(f.values()[i])});
  Json side;
  side["dim"] = f.dim();
  side["points_per_axis"] = f.points_per_axis();
  side["ordering"] = "row-major, last axis fastest";
  for (int j = 0; j < f.dim(); ++j) {
    side["box"]["lo"].push_back(f.box().lo[j]);
    side["box"]["hi"].push_back(f.box().hi[j]);
  }
  std::filesystem::path sidecar = path;
  sidecar.replace_extension(".meta.json");
  std::ofstream(sidecar) << side.dump(2) << '\n';
}

inline Json relation_report_json(const RelationReport& rep) {
  Json j;
  j["symmetry"] = rep.symmetry;
  j["poisson_qp"] = rep.poisson_qp;
  j["poisson_qq"] = rep.poisson_qq;
  j["poisson_pp"] = rep.poisson_pp;
  j["lagrange"] = rep.lagrange;
  j["scale"] = rep.scale;
  j["z_defined"] = rep.z_defined;
  if (rep.z_defined) {
    j["imZ_A"] = rep.imZ_A;
    j["imZinv_B"] = rep.imZinv_B;
    j["siegel_sym"] = rep.siegel_sym;
    j["siegel_pos"] = rep.siegel_pos;
    j["det_identity"] = rep.det_identity;
  }
  return j;
}

/// Branch table CSV with momentum components, action, amplitude
/// determinant, Maslov index, cutoff value, and convergence diagnostics.
inline void write_branch_csv(const std::vector<VanVleckBranch>& branches,
                             int d, const std::filesystem::path& path) {
  CsvWriter csv(path);
  std::vector<std::string> names;
  for (int j = 0; j < d; ++j) names.push_back("p_r" + std::to_string(j));
  for (const char* n :
       {"S_r", "amp_det", "maslov", "cutoff_value", "newton_iterations",
        "boundary_residual"})
    names.push_back(n);
  csv.header(names);
  for (const VanVleckBranch& br : branches) {
    std::vector<double> row;
    for (int j = 0; j < d; ++j) row.push_back(br.p_r[j]);
    row.push_back(br.S_r);
    row.push_back(br.amp_det);
    row.push_back(static_cast<double>(br.maslov));
    row.push_back(br.cutoff_value);
    row.push_back(static_cast<double>(br.newton_iterations));
    row.push_back(br.boundary_residual);
    csv.row(row);
  }
}

}  // namespace agwp
