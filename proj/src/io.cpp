#include "sfe/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace sfe::io {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

std::string displacement_csv(const Mesh& mesh, const Vec& u) {
  std::ostringstream out;
  out << "node,x,y,ux,uy\n";
  for (int n = 0; n < mesh.n_nodes(); ++n)
    out << n << ',' << format_double(mesh.nodes[n][0]) << ','
        << format_double(mesh.nodes[n][1]) << ',' << format_double(u[2 * n]) << ','
        << format_double(u[2 * n + 1]) << '\n';
  return out.str();
}

std::string nodal_field_csv(const Mesh& mesh, const Vec& values,
                            const std::string& value_name) {
  std::ostringstream out;
  out << "node,x,y," << value_name << "\n";
  for (int n = 0; n < mesh.n_nodes(); ++n)
    out << n << ',' << format_double(mesh.nodes[n][0]) << ','
        << format_double(mesh.nodes[n][1]) << ',' << format_double(values[n])
        << '\n';
  return out.str();
}

std::string material_json(const MaterialParams& params, double threshold) {
  json doc;
  doc["library"] = {{"n_mr", params.library.n_mr()},
                    {"n_vol", params.library.n_vol()}};
  json coeffs = json::object();
  for (int m = 0; m < params.kappa.size(); ++m)
    if (std::abs(params.kappa[m]) > threshold)
      coeffs[params.library.label(m)] = params.kappa[m];
  doc["coefficients"] = coeffs;
  return doc.dump(2);
}

MaterialParams material_from_json(const std::string& text) {
  const json doc = json::parse(text);
  FeatureLibrary lib(doc.at("library").at("n_mr").get<int>(),
                     doc.at("library").at("n_vol").get<int>());
  std::map<std::string, double> coeffs;
  for (const auto& [key, value] : doc.at("coefficients").items())
    coeffs[key] = value.get<double>();
  return MaterialParams::from_named(coeffs, lib);
}

std::string library_json(const FeatureLibrary& lib) {
  json doc;
  doc["n_mr"] = lib.n_mr();
  doc["n_vol"] = lib.n_vol();
  json iso = json::array();
  for (const auto& t : lib.iso_terms()) iso.push_back({t.i, t.j});
  doc["iso_exponents"] = iso;
  doc["vol_exponents"] = lib.vol_exponents();
  json labels = json::array();
  for (int m = 0; m < lib.n_phi(); ++m) labels.push_back(lib.label(m));
  doc["labels"] = labels;
  return doc.dump(2);
}

FeatureLibrary library_from_json(const std::string& text) {
  const json doc = json::parse(text);
  return FeatureLibrary(doc.at("n_mr").get<int>(), doc.at("n_vol").get<int>());
}

std::string pareto_csv(const std::vector<ParetoPoint>& path,
                       const FeatureLibrary& lib) {
  std::ostringstream out;
  out << "lambda,rmse,l1_norm,n_active";
  for (int m = 0; m < lib.n_phi(); ++m) out << ',' << lib.label(m);
  out << '\n';
  for (const auto& pt : path) {
    out << format_double(pt.lambda) << ',' << format_double(pt.rmse) << ','
        << format_double(pt.l1_norm) << ',' << pt.n_active;
    for (int m = 0; m < pt.kappa.size(); ++m) out << ',' << format_double(pt.kappa[m]);
    out << '\n';
  }
  return out.str();
}

std::string history_csv(const std::vector<IterationRecord>& history,
                        const FeatureLibrary& lib) {
  std::ostringstream out;
  out << "iteration,rmse_u,model_updated,admissible,converged,eps_w,eps_u";
  for (int m = 0; m < lib.n_phi(); ++m) out << ',' << lib.label(m);
  out << '\n';
  for (const auto& rec : history) {
    out << rec.iteration << ',' << format_double(rec.rmse_u) << ','
        << (rec.model_updated ? 1 : 0) << ',' << (rec.admissible ? 1 : 0) << ','
        << (rec.converged ? 1 : 0) << ',' << format_double(rec.eps_w) << ','
        << format_double(rec.eps_u);
    for (int m = 0; m < lib.n_phi(); ++m)
      out << ',' << (rec.kappa.size() > m ? format_double(rec.kappa[m]) : "");
    out << '\n';
  }
  return out.str();
}

std::string discovered_model_json(const DiscoveredModel& model) {
  json doc;
  doc["lambda_star"] = model.lambda_star;
  doc["n_rows"] = model.n_rows;
  json coeffs = json::object();
  json active = json::array();
  for (int idx : model.active_set) {
    coeffs[model.library.label(idx)] = model.kappa_star[idx];
    active.push_back(model.library.expression(idx));
  }
  doc["coefficients"] = coeffs;
  doc["active_features"] = active;
  doc["expression"] =
      MaterialParams(model.kappa_star, model.library).to_string();
  doc["library"] = {{"n_mr", model.library.n_mr()},
                    {"n_vol", model.library.n_vol()}};
  return doc.dump(2);
}

std::string sensors_json(const SensorSet& sensors) {
  json doc;
  doc["n_sen"] = sensors.n_sen();
  json pos = json::array();
  for (const auto& p : sensors.positions) pos.push_back({p[0], p[1]});
  doc["positions"] = pos;
  doc["node_indices"] = sensors.node_indices;
  return doc.dump(2);
}

std::string readings_csv(const Mat& readings) {
  std::ostringstream out;
  out << "row";
  for (int c = 0; c < readings.cols(); ++c) out << ",reading_" << c;
  out << '\n';
  for (int r = 0; r < readings.rows(); ++r) {
    out << r;
    for (int c = 0; c < readings.cols(); ++c)
      out << ',' << format_double(readings(r, c));
    out << '\n';
  }
  return out.str();
}

void write_gaussian_field(const std::filesystem::path& dir,
                          const std::string& stem, const GaussianField& field) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream out;
    out << "dof,mean\n";
    for (int i = 0; i < field.mean.size(); ++i)
      out << i << ',' << format_double(field.mean[i]) << '\n';
    write_text(dir / (stem + "_mean.csv"), out.str());
  }
  {
    std::ofstream bin(dir / (stem + "_cov.bin"), std::ios::binary);
    for (int r = 0; r < field.cov.rows(); ++r)
      for (int c = 0; c < field.cov.cols(); ++c) {
        const double v = field.cov(r, c);
        bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
  }
  json manifest;
  manifest["n"] = field.mean.size();
  manifest["cov_layout"] = "row-major float64, native endianness";
  manifest["mean_file"] = stem + "_mean.csv";
  manifest["cov_file"] = stem + "_cov.bin";
  write_text(dir / (stem + "_manifest.json"), manifest.dump(2));
}

GaussianField read_gaussian_field(const std::filesystem::path& dir,
                                  const std::string& stem) {
  const json manifest = json::parse(read_text(dir / (stem + "_manifest.json")));
  const int n = manifest.at("n").get<int>();
  GaussianField field;
  field.mean = Vec(n);
  {
    std::istringstream in(read_text(dir / (stem + "_mean.csv")));
    std::string line;
    std::getline(in, line);  // header
    for (int i = 0; i < n; ++i) {
      std::getline(in, line);
      field.mean[i] = std::stod(line.substr(line.find(',') + 1));
    }
  }
  field.cov = Mat(n, n);
  std::ifstream bin(dir / (stem + "_cov.bin"), std::ios::binary);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double v = 0.0;
      bin.read(reinterpret_cast<char*>(&v), sizeof(double));
      field.cov(r, c) = v;
    }
  return field;
}

void write_pce(const std::filesystem::path& dir, const PCExpansion& pce) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["order"] = pce.order();
  manifest["basis"] = "probabilists-hermite";
  manifest["fit_residual"] = pce.fit_residual;
  json files = json::array();
  for (size_t j = 0; j < pce.coeffs.size(); ++j) {
    const std::string name = "pce_coeff_" + std::to_string(j) + ".csv";
    std::ostringstream out;
    out << "dof,value\n";
    for (int i = 0; i < pce.coeffs[j].size(); ++i)
      out << i << ',' << format_double(pce.coeffs[j][i]) << '\n';
    write_text(dir / name, out.str());
    files.push_back(name);
  }
  manifest["coefficient_files"] = files;
  write_text(dir / "pce_manifest.json", manifest.dump(2));
}

PCExpansion read_pce(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_text(dir / "pce_manifest.json"));
  PCExpansion pce;
  pce.fit_residual = manifest.at("fit_residual").get<double>();
  for (const auto& name : manifest.at("coefficient_files")) {
    std::istringstream in(read_text(dir / name.get<std::string>()));
    std::string line;
    std::getline(in, line);
    std::vector<double> values;
    while (std::getline(in, line))
      if (!line.empty()) values.push_back(std::stod(line.substr(line.find(',') + 1)));
    pce.coeffs.push_back(Eigen::Map<Vec>(values.data(), values.size()));
  }
  return pce;
}

}  // namespace sfe::io
