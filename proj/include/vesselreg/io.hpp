#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vesselreg/benchmark.hpp"
#include "vesselreg/deformation.hpp"
#include "vesselreg/thinning.hpp"

namespace vesselreg {
namespace io {

inline constexpr const char* kFormatVersion = "1";

double round6(double v);
std::string fmt6(double v);

// Skeleton point CSV: header `x,y[,z]`, one point per row.
SkeletonPointSet read_skeleton_csv(const std::string& path);
void write_skeleton_csv(const std::string& path, const SkeletonPointSet& points);

// PGM (P2 or P5), foreground at values >= 128.
Mask2D read_pgm(const std::string& path);

// Raw `.vox`: ASCII header line "nx ny nz", then nx*ny*nz bytes, x fastest.
Volume3D read_vox(const std::string& path);
void write_vox(const std::string& path, const Volume3D& volume);

// Plain text 3x4 projection matrix, row-major.
ProjectionMatrix read_projection(const std::string& path);
void write_projection(const std::string& path, const ProjectionMatrix& P);

// Rigid transform: three rotation rows then the translation row.
RigidTransform3D read_rigid(const std::string& path);

nlohmann::json decomposition_to_json(const NodeDecomposition& decomposition);

nlohmann::json registration_result_to_json(const RegistrationResult& result,
                                           const nlohmann::json& config, bool record_timing);

// Sparse assignment triplets: `row,col,value`.
std::string assignment_csv(const AssignmentMatrix& M);

std::string metrics_csv(const std::vector<MetricsReport>& reports, const nlohmann::json& config,
                        bool record_timing);

std::string overlay_svg(const OverlayData& overlay, const nlohmann::json& config);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace io
}  // namespace vesselreg
