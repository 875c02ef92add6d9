#pragma once

#include "sfe/pipeline.hpp"

#include <filesystem>
#include <string>

namespace sfe::io {

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// node id, x, y, ux, uy
std::string displacement_csv(const Mesh& mesh, const Vec& u);

/// node id, x, y, value
std::string nodal_field_csv(const Mesh& mesh, const Vec& values,
                            const std::string& value_name);

std::string material_json(const MaterialParams& params, double threshold = 0.0);
MaterialParams material_from_json(const std::string& text);

std::string library_json(const FeatureLibrary& lib);
FeatureLibrary library_from_json(const std::string& text);

/// lambda, rmse, l1_norm, n_active, then one column per feature coefficient.
std::string pareto_csv(const std::vector<ParetoPoint>& path,
                       const FeatureLibrary& lib);

std::string history_csv(const std::vector<IterationRecord>& history,
                        const FeatureLibrary& lib);

std::string discovered_model_json(const DiscoveredModel& model);

std::string sensors_json(const SensorSet& sensors);

/// Matrix of stacked sensor readings, one row per observed DOF.
std::string readings_csv(const Mat& readings);

/// Mean as CSV, covariance as a raw little-endian row-major double file,
/// dimensions in a JSON manifest.
void write_gaussian_field(const std::filesystem::path& dir,
                          const std::string& stem, const GaussianField& field);
GaussianField read_gaussian_field(const std::filesystem::path& dir,
                                  const std::string& stem);

void write_pce(const std::filesystem::path& dir, const PCExpansion& pce);
PCExpansion read_pce(const std::filesystem::path& dir);

}  // namespace sfe::io
