#include "vesselreg/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vesselreg {
namespace io {

double round6(double v) {
  if (!std::isfinite(v)) return v;
  return std::round(v * 1e6) / 1e6;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::string(buf);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::format_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::format_error, "cannot write " + path);
  out << content;
}

SkeletonPointSet read_skeleton_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::format_error, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(errc::format_error, "empty skeleton file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int dim = 0;
  if (line == "x,y") {
    dim = 2;
  } else if (line == "x,y,z") {
    dim = 3;
  } else {
    throw Error(errc::format_error, "expected header x,y or x,y,z in " + path);
  }
  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    int got = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(errc::format_error, "bad number '" + cell + "' in " + path);
      }
      ++got;
    }
    if (got != dim) throw Error(errc::format_error, "wrong column count in " + path);
    ++rows;
  }
  if (rows == 0) throw Error(errc::empty_input, "no points in " + path);
  Eigen::MatrixXd pts(dim, rows);
  for (int r = 0; r < rows; ++r) {
    for (int a = 0; a < dim; ++a) pts(a, r) = values[static_cast<size_t>(r) * dim + a];
  }
  return make_point_set(pts);
}

void write_skeleton_csv(const std::string& path, const SkeletonPointSet& points) {
  std::ostringstream out;
  out << (points.dim == 2 ? "x,y\n" : "x,y,z\n");
  for (int i = 0; i < points.size(); ++i) {
    for (int a = 0; a < points.dim; ++a) {
      if (a) out << ',';
      out << fmt6(points.points(a, i));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

namespace {

int next_pnm_token(std::istream& in) {
  // Skips whitespace and '#' comments.
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return in ? value : -1;
}

}  // namespace

Mask2D read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::format_error, "cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") {
    throw Error(errc::format_error, "not a PGM (P2/P5) file: " + path);
  }
  const int width = next_pnm_token(in);
  const int height = next_pnm_token(in);
  const int maxval = next_pnm_token(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(errc::format_error, "bad PGM header in " + path);
  }
  Mask2D mask;
  mask.width = width;
  mask.height = height;
  mask.data.assign(static_cast<size_t>(width) * height, 0);
  if (magic == "P2") {
    for (size_t i = 0; i < mask.data.size(); ++i) {
      const int v = next_pnm_token(in);
      if (v < 0) throw Error(errc::format_error, "truncated P2 data in " + path);
      mask.data[i] = v >= 128 ? 1 : 0;
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<char> raw(mask.data.size() * bytes);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw Error(errc::format_error, "truncated P5 data in " + path);
    }
    for (size_t i = 0; i < mask.data.size(); ++i) {
      const int v = bytes == 1
                        ? static_cast<unsigned char>(raw[i])
                        : (static_cast<unsigned char>(raw[2 * i]) << 8) |
                              static_cast<unsigned char>(raw[2 * i + 1]);
      mask.data[i] = v >= 128 ? 1 : 0;
    }
  }
  return mask;
}

Volume3D read_vox(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::format_error, "cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw Error(errc::format_error, "missing vox header in " + path);
  std::istringstream hs(header);
  Volume3D v;
  if (!(hs >> v.nx >> v.ny >> v.nz) || v.nx <= 0 || v.ny <= 0 || v.nz <= 0) {
    throw Error(errc::format_error, "bad vox header '" + header + "' in " + path);
  }
  const size_t count = static_cast<size_t>(v.nx) * v.ny * v.nz;
  std::vector<char> raw(count);
  in.read(raw.data(), static_cast<std::streamsize>(count));
  if (in.gcount() != static_cast<std::streamsize>(count)) {
    throw Error(errc::format_error, "truncated vox data in " + path);
  }
  v.data.resize(count);
  for (size_t i = 0; i < count; ++i) v.data[i] = raw[i] ? 1 : 0;
  return v;
}

void write_vox(const std::string& path, const Volume3D& volume) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::format_error, "cannot write " + path);
  out << volume.nx << ' ' << volume.ny << ' ' << volume.nz << '\n';
  out.write(reinterpret_cast<const char*>(volume.data.data()),
            static_cast<std::streamsize>(volume.data.size()));
}

ProjectionMatrix read_projection(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::format_error, "cannot open " + path);
  ProjectionMatrix P;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!(in >> P.P(r, c))) {
        throw Error(errc::format_error, "projection file needs 3x4 numbers: " + path);
      }
    }
  }
  if (P.P.row(2).norm() == 0) {
    throw Error(errc::format_error, "projection row p3 is identically zero in " + path);
  }
  return P;
}

void write_projection(const std::string& path, const ProjectionMatrix& P) {
  std::ostringstream out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (c) out << ' ';
      out << fmt6(P.P(r, c));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

RigidTransform3D read_rigid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::format_error, "cannot open " + path);
  RigidTransform3D rigid;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (!(in >> rigid.rotation(r, c))) {
        throw Error(errc::format_error, "rigid file needs 3x3 rotation then translation: " + path);
      }
    }
  }
  for (int c = 0; c < 3; ++c) {
    if (!(in >> rigid.translation(c))) {
      throw Error(errc::format_error, "rigid file missing translation row: " + path);
    }
  }
  const double ortho = (rigid.rotation.transpose() * rigid.rotation -
                        Eigen::Matrix3d::Identity())
                           .norm();
  if (ortho > 1e-6 || rigid.rotation.determinant() < 0) {
    throw Error(errc::format_error, "rotation is not special orthogonal in " + path);
  }
  return rigid;
}

nlohmann::json decomposition_to_json(const NodeDecomposition& d) {
  nlohmann::json j;
  j["branches"] = d.branches;
  j["trunks"] = d.trunks;
  j["end_nodes"] = d.end_nodes;
  j["junction_nodes"] = d.junction_nodes;
  j["quasi_junction_nodes"] = d.quasi_junction_nodes;
  j["deleted_nodes"] = d.deleted_nodes;
  return j;
}

nlohmann::json registration_result_to_json(const RegistrationResult& result,
                                           const nlohmann::json& config, bool record_timing) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["config"] = config;
  nlohmann::json disp = nlohmann::json::array();
  for (Eigen::Index c = 0; c < result.displacements.cols(); ++c) {
    disp.push_back({round6(result.displacements(0, c)), round6(result.displacements(1, c)),
                    round6(result.displacements(2, c))});
  }
  j["displacements"] = std::move(disp);
  j["deleted_nodes"] = result.deleted_nodes;
  j["unassigned_nodes"] = result.unassigned_nodes;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["line_search_failed"] = result.line_search_failed;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : result.energy_trace) {
    trace.push_back({{"energy", round6(t.total)},
                     {"data", round6(t.data)},
                     {"length", round6(t.length)},
                     {"smooth", round6(t.smooth)}});
  }
  j["energy_trace"] = std::move(trace);
  nlohmann::json timing;
  for (const auto& [stage, ms] : result.timing_ms) {
    timing[stage] = record_timing ? round6(ms) : 0.0;
  }
  j["timing_ms"] = std::move(timing);
  return j;
}

std::string assignment_csv(const AssignmentMatrix& M) {
  std::ostringstream out;
  out << "row,col,value\n";
  for (int c = 0; c < M.cols(); ++c) {
    for (const auto& [r, w] : M.column(c)) {
      out << r << ',' << c << ',' << fmt6(w) << '\n';
    }
  }
  return out.str();
}

std::string metrics_csv(const std::vector<MetricsReport>& reports, const nlohmann::json& config,
                        bool record_timing) {
  std::ostringstream out;
  out << "# vesselreg-metrics v" << kFormatVersion << '\n';
  out << "# config: " << config.dump() << '\n';
  out << "case_id,method,mean_2d_px,std_2d_px,mean_3d_mm,std_3d_mm,sv_2d_px,sv_3d_mm,runtime_ms\n";
  for (const auto& r : reports) {
    out << r.case_id << ',' << r.method << ',';
    if (r.failed) {
      out << ",,,,,," << '\n';
      continue;
    }
    out << fmt6(r.mean_2d) << ',' << fmt6(r.std_2d) << ',';
    out << (r.mean_3d ? fmt6(*r.mean_3d) : "") << ',' << (r.std_3d ? fmt6(*r.std_3d) : "") << ',';
    out << fmt6(r.sv_2d) << ',' << (r.sv_3d ? fmt6(*r.sv_3d) : "") << ',';
    out << (record_timing ? fmt6(r.runtime_ms) : fmt6(0.0)) << '\n';
  }
  return out.str();
}

namespace {

void append_polylines(std::ostringstream& out, const std::vector<Eigen::MatrixXd>& polys,
                      const char* cls) {
  out << "  <g class=\"" << cls << "\">\n";
  for (const auto& poly : polys) {
    out << "    <polyline points=\"";
    for (Eigen::Index c = 0; c < poly.cols(); ++c) {
      if (c) out << ' ';
      out << fmt6(poly(0, c)) << ',' << fmt6(poly(1, c));
    }
    out << "\"/>\n";
  }
  out << "  </g>\n";
}

}  // namespace

std::string overlay_svg(const OverlayData& overlay, const nlohmann::json& config) {
  double xmin = 1e30, xmax = -1e30, ymin = 1e30, ymax = -1e30;
  auto extend = [&](const std::vector<Eigen::MatrixXd>& polys) {
    for (const auto& poly : polys) {
      for (Eigen::Index c = 0; c < poly.cols(); ++c) {
        xmin = std::min(xmin, poly(0, c));
        xmax = std::max(xmax, poly(0, c));
        ymin = std::min(ymin, poly(1, c));
        ymax = std::max(ymax, poly(1, c));
      }
    }
  };
  extend(overlay.preop);
  extend(overlay.intraop);
  extend(overlay.prediction);
  if (xmin > xmax) {
    xmin = ymin = 0;
    xmax = ymax = 1;
  }
  const double pad = 10;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt6(xmin - pad) << ' '
      << fmt6(ymin - pad) << ' ' << fmt6(xmax - xmin + 2 * pad) << ' '
      << fmt6(ymax - ymin + 2 * pad) << "\">\n";
  out << "  <desc>vesselreg-overlay v" << kFormatVersion << " config=" << config.dump()
      << "</desc>\n";
  out << "  <style>\n"
         "    .preop polyline { stroke: #888888; stroke-width: 1.2; fill: none; }\n"
         "    .intraop polyline { stroke: #d62728; stroke-width: 1.2; fill: none; }\n"
         "    .prediction polyline { stroke: #1f77b4; stroke-width: 1.2; fill: none; }\n"
         "  </style>\n";
  append_polylines(out, overlay.preop, "preop");
  append_polylines(out, overlay.intraop, "intraop");
  append_polylines(out, overlay.prediction, "prediction");
  out << "</svg>\n";
  return out.str();
}

}  // namespace io
}  // namespace vesselreg
