#include "sfe/cli.hpp"

#include "sfe/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>

namespace sfe::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& obj, const std::string& scope,
                    const std::vector<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError("config section '" + scope + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown config key '" + scope + key + "'");
}

template <typename T>
void assign(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

std::map<std::string, double> coeff_map(const json& obj) {
  std::map<std::string, double> coeffs;
  for (const auto& [key, value] : obj.items()) coeffs[key] = value.get<double>();
  return coeffs;
}

}  // namespace

BenchmarkConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  reject_unknown(doc, "", {"mesh", "library", "material", "prior", "load", "solver",
                           "sensors", "noise", "seed", "jobs", "pce", "loop",
                           "euclid"});

  BenchmarkConfig c;
  if (doc.contains("mesh")) {
    const auto& m = doc["mesh"];
    reject_unknown(m, "mesh.", {"width", "height", "hole_radius", "refinement"});
    assign(m, "width", c.mesh.width);
    assign(m, "height", c.mesh.height);
    assign(m, "hole_radius", c.mesh.hole_radius);
    assign(m, "refinement", c.mesh.refinement);
  }
  if (doc.contains("library")) {
    const auto& l = doc["library"];
    reject_unknown(l, "library.", {"n_mr", "n_vol"});
    assign(l, "n_mr", c.n_mr);
    assign(l, "n_vol", c.n_vol);
  }
  if (doc.contains("material")) {
    const auto& m = doc["material"];
    reject_unknown(m, "material.", {"truth", "initial"});
    if (m.contains("truth")) c.truth_coeffs = coeff_map(m["truth"]);
    if (m.contains("initial")) c.initial_coeffs = coeff_map(m["initial"]);
  }
  if (doc.contains("prior")) {
    const auto& p = doc["prior"];
    reject_unknown(p, "prior.", {"youngs_modulus", "poisson_ratio"});
    assign(p, "youngs_modulus", c.prior.youngs_modulus);
    assign(p, "poisson_ratio", c.prior.poisson_ratio);
  }
  if (doc.contains("load")) {
    const auto& l = doc["load"];
    reject_unknown(l, "load.", {"t_max", "eta"});
    assign(l, "t_max", c.t_max);
    assign(l, "eta", c.eta);
  }
  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    reject_unknown(s, "solver.", {"newton_tol", "max_iters", "n_load_steps"});
    assign(s, "newton_tol", c.solver.newton_tol);
    assign(s, "max_iters", c.solver.max_iters);
    assign(s, "n_load_steps", c.solver.n_load_steps);
  }
  if (doc.contains("sensors")) {
    const auto& s = doc["sensors"];
    reject_unknown(s, "sensors.", {"preset", "positions"});
    if (s.contains("preset")) c.sensor_preset = s["preset"].get<std::string>();
    if (s.contains("positions")) {
      c.sensor_preset.clear();
      c.sensor_positions.clear();
      for (const auto& p : s["positions"])
        c.sensor_positions.push_back(Vec2(p.at(0).get<double>(), p.at(1).get<double>()));
    }
  }
  if (doc.contains("noise")) {
    const auto& n = doc["noise"];
    reject_unknown(n, "noise.", {"sigma_e", "n_r"});
    assign(n, "sigma_e", c.noise.sigma_e);
    assign(n, "n_r", c.noise.n_r);
  }
  if (doc.contains("seed")) c.seed = doc["seed"].get<uint64_t>();
  if (doc.contains("jobs")) c.jobs = doc["jobs"].get<int>();
  if (doc.contains("pce")) {
    const auto& p = doc["pce"];
    reject_unknown(p, "pce.", {"order", "n_samples", "sigma_t_ratio"});
    assign(p, "order", c.pce.order);
    assign(p, "n_samples", c.pce.n_samples);
    assign(p, "sigma_t_ratio", c.pce.sigma_t_ratio);
  }
  if (doc.contains("loop")) {
    const auto& l = doc["loop"];
    reject_unknown(l, "loop.",
                   {"max_iterations", "tol", "tol_multiplier", "tol_min",
                    "sigma_e_floor", "freeze_model", "fit_slack",
                    "sigma_s_scale"});
    assign(l, "max_iterations", c.loop.max_iterations);
    assign(l, "tol", c.loop.tol);
    assign(l, "tol_multiplier", c.loop.tol_multiplier);
    assign(l, "tol_min", c.loop.tol_min);
    assign(l, "sigma_e_floor", c.loop.sigma_e_floor);
    assign(l, "freeze_model", c.loop.freeze_model);
    assign(l, "fit_slack", c.loop.fit_slack);
    assign(l, "sigma_s_scale", c.loop.sigma_s_scale);
  }
  if (doc.contains("euclid")) {
    const auto& e = doc["euclid"];
    reject_unknown(e, "euclid.",
                   {"lambda_min", "lambda_max", "n_lambda", "tau", "r",
                    "active_threshold"});
    assign(e, "lambda_min", c.euclid.lambda_min);
    assign(e, "lambda_max", c.euclid.lambda_max);
    assign(e, "n_lambda", c.euclid.n_lambda);
    assign(e, "tau", c.euclid.tau);
    assign(e, "r", c.euclid.penalty_multiplier);
    assign(e, "active_threshold", c.euclid.active_threshold);
  }

  // Eager validation so config errors surface before any solve.
  if (c.prior.poisson_ratio <= -1.0 || c.prior.poisson_ratio >= 0.5)
    throw ConfigError("prior.poisson_ratio must lie in (-1, 0.5)");
  if (c.noise.sigma_e < 0.0) throw ConfigError("noise.sigma_e must be nonnegative");
  if (c.noise.n_r < 1) throw ConfigError("noise.n_r must be >= 1");
  if (c.eta < 0.0 || c.eta > 1.0) throw ConfigError("load.eta must lie in [0, 1]");
  c.library();       // validates n_mr/n_vol
  c.truth_params();  // validates coefficient names
  if (!c.initial_coeffs.empty())
    MaterialParams::from_named(c.initial_coeffs, c.library());
  return c;
}

std::string config_to_json(const BenchmarkConfig& c) {
  json doc;
  doc["mesh"] = {{"width", c.mesh.width},
                 {"height", c.mesh.height},
                 {"hole_radius", c.mesh.hole_radius},
                 {"refinement", c.mesh.refinement}};
  doc["library"] = {{"n_mr", c.n_mr}, {"n_vol", c.n_vol}};
  doc["material"]["truth"] = c.truth_coeffs;
  if (!c.initial_coeffs.empty()) doc["material"]["initial"] = c.initial_coeffs;
  doc["prior"] = {{"youngs_modulus", c.prior.youngs_modulus},
                  {"poisson_ratio", c.prior.poisson_ratio}};
  doc["load"] = {{"t_max", c.t_max}, {"eta", c.eta}};
  doc["solver"] = {{"newton_tol", c.solver.newton_tol},
                   {"max_iters", c.solver.max_iters},
                   {"n_load_steps", c.solver.n_load_steps}};
  if (!c.sensor_preset.empty()) {
    doc["sensors"] = {{"preset", c.sensor_preset}};
  } else {
    json positions = json::array();
    for (const auto& p : c.sensor_positions) positions.push_back({p[0], p[1]});
    doc["sensors"] = {{"positions", positions}};
  }
  doc["noise"] = {{"sigma_e", c.noise.sigma_e}, {"n_r", c.noise.n_r}};
  doc["seed"] = c.seed;
  doc["jobs"] = c.jobs;
  doc["pce"] = {{"order", c.pce.order},
                {"n_samples", c.pce.n_samples},
                {"sigma_t_ratio", c.pce.sigma_t_ratio}};
  doc["loop"] = {{"max_iterations", c.loop.max_iterations},
                 {"tol", c.loop.tol},
                 {"tol_multiplier", c.loop.tol_multiplier},
                 {"tol_min", c.loop.tol_min},
                 {"sigma_e_floor", c.loop.sigma_e_floor},
                 {"freeze_model", c.loop.freeze_model},
                 {"fit_slack", c.loop.fit_slack},
                 {"sigma_s_scale", c.loop.sigma_s_scale}};
  doc["euclid"] = {{"lambda_min", c.euclid.lambda_min},
                   {"lambda_max", c.euclid.lambda_max},
                   {"n_lambda", c.euclid.n_lambda},
                   {"tau", c.euclid.tau},
                   {"r", c.euclid.penalty_multiplier},
                   {"active_threshold", c.euclid.active_threshold}};
  return doc.dump(2);
}

std::string apply_override(const std::string& json_text, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + spec + "'");
  const std::string path = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);

  json doc = json::parse(json_text);
  json* node = &doc;
  size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("empty key segment in '" + path + "'");
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::parse_error&) {
        parsed = value;  // bare strings, e.g. sensors.preset=dense38
      }
      (*node)[key] = parsed;
      break;
    }
    node = &((*node)[key]);
    start = dot + 1;
  }
  return doc.dump(2);
}

BenchmarkConfig load_config(const CommonOptions& options) {
  if (options.config_path.empty())
    throw ConfigError("missing --config PATH (see --help)");
  std::string text = io::read_text(options.config_path);
  for (const auto& spec : options.overrides) text = apply_override(text, spec);
  BenchmarkConfig config = config_from_json(text);
  if (options.seed >= 0) config.seed = static_cast<uint64_t>(options.seed);
  if (options.jobs > 0) config.jobs = options.jobs;
  return config;
}

namespace {

void write_resolved_config(const fs::path& dir, const BenchmarkConfig& config) {
  fs::create_directories(dir);
  io::write_text(dir / "config.json", config_to_json(config));
}

json metrics_json_of(double eps_w, double eps_u, long excluded, int n_rows) {
  json doc;
  doc["eps_w"] = eps_w;
  doc["eps_u"] = eps_u;
  doc["eps_w_excluded_grid_points"] = excluded;
  doc["rmse_rows_assembled"] = n_rows;
  return doc;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfigError;
  } catch (const NoAdmissibleModelError& err) {
    std::cerr << "no admissible model: " << err.what()
              << " (consider adding sensors)\n";
    return kExitNoAdmissibleModel;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumericalError;
  }
}

}  // namespace

int cmd_forward(const CommonOptions& options) {
  return guarded([&] {
    const auto config = load_config(options);
    const fs::path dir = options.out_dir;
    write_resolved_config(dir, config);

    const auto mesh = build_plate_with_hole(config.mesh.width, config.mesh.height,
                                            config.mesh.hole_radius,
                                            config.mesh.refinement);
    const Material material = config.truth_params();
    const LoadCase load{config.t_max, config.eta};
    const auto sol = solve_forward(mesh, material, load, config.solver);

    io::write_text(dir / "displacement.csv", io::displacement_csv(mesh, sol.u));
    const Vec vm = nodal_von_mises(mesh, sol.u, material);
    io::write_text(dir / "von_mises.csv", io::nodal_field_csv(mesh, vm, "von_mises"));
    io::write_text(dir / "mesh.json", mesh.to_json_string());
    std::cout << "forward solve converged, |u|_max = "
              << sol.u.cwiseAbs().maxCoeff() << " mm; fields written to "
              << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_generate_data(const CommonOptions& options) {
  return guarded([&] {
    const auto config = load_config(options);
    const fs::path dir = options.out_dir;
    write_resolved_config(dir, config);

    const auto setup = prepare_case(config);
    io::write_text(dir / "y.csv", io::readings_csv(setup.readings));
    io::write_text(dir / "sensors.json", io::sensors_json(setup.sensors));
    io::write_text(dir / "u_true.csv", io::displacement_csv(setup.mesh, setup.u_true));
    std::cout << "wrote " << setup.readings.rows() << " observation rows ("
              << setup.sensors.n_sen() << " sensors x 2 DOF, n_r = "
              << setup.readings.cols() << ") to " << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_discover(const CommonOptions& options, const std::string& mode) {
  return guarded([&] {
    if (mode != "euclid" && mode != "statfem-euclid")
      throw ConfigError("mode must be 'euclid' or 'statfem-euclid', got '" + mode +
                        "'");
    const auto config = load_config(options);
    const fs::path dir = options.out_dir;
    write_resolved_config(dir, config);

    const auto lib = config.library();
    if (mode == "euclid") {
      const auto setup = prepare_case(config);
      const auto result = run_euclid_baseline(setup.readings, setup.sensors, config);
      if (result.status == BaselineStatus::insufficient_sensors) {
        std::cout << "insufficient sensors: " << result.message
                  << " (add sensors and retry)\n";
        return kExitNoAdmissibleModel;
      }
      if (result.status == BaselineStatus::no_admissible_model) {
        std::cout << "no admissible model: " << result.message
                  << " (add sensors and retry)\n";
        return kExitNoAdmissibleModel;
      }
      io::write_text(dir / "discovered_model.json",
                     io::discovered_model_json(result.model));
      io::write_text(dir / "pareto_iter1.csv",
                     io::pareto_csv(result.model.pareto_path, lib));
      io::write_text(dir / "metrics.json",
                     metrics_json_of(result.eps_w, result.eps_u,
                                     result.eps_w_excluded, result.model.n_rows)
                         .dump(2));
      io::write_text(dir / "fields_u_disc.csv",
                     io::displacement_csv(setup.mesh, result.u_disc));
      std::cout << "W = "
                << MaterialParams(result.model.kappa_star, lib).to_string()
                << "\neps_u = " << result.eps_u << ", eps_W = " << result.eps_w
                << "\n";
      return kExitOk;
    }

    const auto result = run_statfem_euclid(config);
    io::write_text(dir / "history.csv", io::history_csv(result.history, lib));
    if (!result.has_model) {
      std::cout << "no admissible model discovered in "
                << result.history.size()
                << " iterations (add sensors and retry)\n";
      return kExitNoAdmissibleModel;
    }
    io::write_text(dir / "discovered_model.json",
                   io::discovered_model_json(result.model));
    io::write_text(dir / ("pareto_iter" + std::to_string(result.history.size()) +
                          ".csv"),
                   io::pareto_csv(result.model.pareto_path, lib));
    io::write_text(dir / "metrics.json",
                   metrics_json_of(result.eps_w, result.eps_u,
                                   result.eps_w_excluded, result.model.n_rows)
                       .dump(2));

    const auto mesh = build_plate_with_hole(config.mesh.width, config.mesh.height,
                                            config.mesh.hole_radius,
                                            config.mesh.refinement);
    io::write_text(dir / "fields_u_true.csv",
                   io::displacement_csv(mesh, result.u_true));
    io::write_text(dir / "fields_u_disc.csv",
                   io::displacement_csv(mesh, result.u_disc));
    io::write_text(dir / "fields_disp_error.csv",
                   io::nodal_field_csv(
                       mesh,
                       nodal_displacement_error(mesh, result.u_disc, result.u_true),
                       "abs_disp_error"));
    const Material truth_mat = config.truth_params();
    const Material disc_mat = MaterialParams(result.model.kappa_star, lib);
    const Vec vm_true = nodal_von_mises(mesh, result.u_true, truth_mat);
    const Vec vm_disc = nodal_von_mises(mesh, result.u_disc, disc_mat);
    io::write_text(dir / "fields_von_mises_error.csv",
                   io::nodal_field_csv(mesh, (vm_disc - vm_true).cwiseAbs(),
                                       "abs_von_mises_error"));

    std::cout << "W = " << MaterialParams(result.model.kappa_star, lib).to_string()
              << "\nconverged = " << (result.converged ? "yes" : "no")
              << " after " << result.history.size() << " iterations"
              << "\neps_u = " << result.eps_u << ", eps_W = " << result.eps_w
              << "\n";
    return kExitOk;
  });
}

int cmd_benchmark_suite(const CommonOptions& options) {
  return guarded([&] {
    const auto base = load_config(options);
    const fs::path dir = options.out_dir;
    fs::create_directories(dir);

    std::ostringstream table;
    table << "sigma_e,n_sen,method,model,eps_u,eps_w,status\n";
    const double sigmas[] = {1e-3, 1e-4};
    const std::pair<const char*, int> presets[] = {
        {"sparse3", 3}, {"medium13", 13}, {"dense38", 38}};

    for (double sigma : sigmas)
      for (const auto& [preset, n_sen] : presets) {
        BenchmarkConfig config = base;
        config.noise.sigma_e = sigma;
        config.sensor_preset = preset;
        config.sensor_positions.clear();

        const auto setup = prepare_case(config);
        const auto lib = config.library();

        {
          const auto result = run_euclid_baseline(setup.readings, setup.sensors,
                                                  config);
          std::string model = "--", status = "ok";
          double eps_u = 0.0, eps_w = 0.0;
          if (result.status == BaselineStatus::ok) {
            model = MaterialParams(result.model.kappa_star, lib).to_string();
            eps_u = result.eps_u;
            eps_w = result.eps_w;
          } else {
            status = result.status == BaselineStatus::insufficient_sensors
                         ? "insufficient-sensors"
                         : "no-admissible-model";
          }
          table << sigma << ',' << n_sen << ",euclid,\"" << model << "\","
                << (model == "--" ? "" : std::to_string(eps_u)) << ','
                << (model == "--" ? "" : std::to_string(eps_w)) << ',' << status
                << '\n';
        }
        {
          const auto result = run_statfem_euclid(config);
          std::string model = "--", status = "ok";
          if (result.has_model)
            model = MaterialParams(result.model.kappa_star, lib).to_string();
          else
            status = "no-admissible-model";
          if (!result.converged) status += "+unconverged";
          table << sigma << ',' << n_sen << ",statfem-euclid,\"" << model << "\","
                << (result.has_model ? std::to_string(result.eps_u) : "") << ','
                << (result.has_model ? std::to_string(result.eps_w) : "") << ','
                << status << '\n';

          const fs::path case_dir =
              dir / ("statfem_euclid_s" + std::to_string(sigma) + "_n" +
                     std::to_string(n_sen));
          fs::create_directories(case_dir);
          io::write_text(case_dir / "history.csv",
                         io::history_csv(result.history, lib));
        }
        std::cout << "finished sigma_e = " << sigma << ", n_sen = " << n_sen
                  << "\n";
      }

    io::write_text(dir / "suite.csv", table.str());
    write_resolved_config(dir, base);
    std::cout << "suite table written to " << (dir / "suite.csv").string() << "\n";
    return kExitOk;
  });
}

int cmd_metrics(const CommonOptions& options, const std::string& model_path) {
  return guarded([&] {
    const auto config = load_config(options);
    const fs::path dir = options.out_dir;
    write_resolved_config(dir, config);

    const json model_doc = json::parse(io::read_text(model_path));
    std::map<std::string, double> coeffs;
    for (const auto& [key, value] : model_doc.at("coefficients").items())
      coeffs[key] = value.get<double>();
    const auto lib = config.library();
    const MaterialParams disc = MaterialParams::from_named(coeffs, lib);

    const auto setup = prepare_case(config);
    const auto truth = config.truth_params();
    const LoadCase load{config.t_max, config.eta};
    const auto ranges = observed_invariant_ranges(setup.mesh, setup.u_true);
    const auto ew = error_eps_w(truth, disc, ranges);
    const Vec u_disc = solve_forward(setup.mesh, disc, load, config.solver).u;
    const double eps_u = error_eps_u(u_disc, setup.u_true);

    io::write_text(dir / "metrics.json",
                   metrics_json_of(ew.value, eps_u, ew.excluded, 0).dump(2));
    io::write_text(dir / "fields_disp_error.csv",
                   io::nodal_field_csv(
                       setup.mesh,
                       nodal_displacement_error(setup.mesh, u_disc, setup.u_true),
                       "abs_disp_error"));
    std::cout << "eps_u = " << eps_u << ", eps_W = " << ew.value << "\n";
    return kExitOk;
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Hyperelastic constitutive model discovery from sparse, noisy "
               "displacement data"};
  app.require_subcommand(1);

  CommonOptions options;
  std::string mode = "statfem-euclid";
  std::string model_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", options.config_path, "config file (JSON)");
    cmd->add_option("--out", options.out_dir, "output directory");
    cmd->add_option("--set", options.overrides,
                    "override a config entry, key.path=value (repeatable)");
    cmd->add_option("--seed", options.seed, "override the master seed");
    cmd->add_option("--jobs", options.jobs, "worker threads for parallel solves");
  };

  auto* forward = app.add_subcommand("forward", "solve the forward problem and "
                                                "write displacement/stress fields");
  add_common(forward);
  auto* gen = app.add_subcommand("generate-data",
                                 "write synthetic sensor observations");
  add_common(gen);
  auto* discover = app.add_subcommand("discover", "run model discovery");
  add_common(discover);
  discover->add_option("--mode", mode, "euclid | statfem-euclid")
      ->check(CLI::IsMember({"euclid", "statfem-euclid"}));
  auto* suite = app.add_subcommand(
      "benchmark-suite", "run the sigma_e x n_sen grid for both methods");
  add_common(suite);
  auto* metrics = app.add_subcommand("metrics",
                                     "evaluate error metrics of a discovered model");
  add_common(metrics);
  metrics->add_option("--model", model_path, "discovered_model.json path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (forward->parsed()) return cmd_forward(options);
  if (gen->parsed()) return cmd_generate_data(options);
  if (discover->parsed()) return cmd_discover(options, mode);
  if (suite->parsed()) return cmd_benchmark_suite(options);
  if (metrics->parsed()) return cmd_metrics(options, model_path);
  return kExitConfigError;
}

}  // namespace sfe::cli
