#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cbf/checks.hpp"
#include "cbf/config.hpp"
#include "cbf/levelset.hpp"

// Exit codes: 0 ok, 1 check failure, 2 config/validation, 3 query error,
// 4 shift schedule invalid.

namespace cbf {

namespace cli_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

inline Vec parse_state(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
    vals.push_back(v);
  }
  if (vals.empty()) throw std::invalid_argument("empty state");
  return make_vec(vals);
}

inline std::vector<int> mid_indices(const CbfGrid& grid) {
  std::vector<int> idx(static_cast<std::size_t>(grid.dim()));
  for (int i = 0; i < grid.dim(); ++i)
    idx[static_cast<std::size_t>(i)] = grid.axes[static_cast<std::size_t>(i)].count / 2;
  return idx;
}

inline int cmd_synth(const std::string& config_path, const std::string& out_path,
                     std::optional<int> threads_flag, std::optional<std::uint64_t> seed_flag,
                     bool force) {
  RunConfig cfg;
  try {
    cfg = parse_run_config(read_file(config_path));
    if (!cfg.sys || !cfg.field || !cfg.domain || !cfg.spec)
      throw std::invalid_argument("config: synth needs model, constraint, domain and synthesis blocks");
    resolve_htilde(cfg);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (!cfg.sub) cfg.sub = default_subset(*cfg.sys, cfg.spec->delta);

  const ValidationReport rep = validate_spec(*cfg.spec, *cfg.field, *cfg.domain);
  if (!rep.ok()) {
    std::cerr << rep.summary();
    return 2;
  }
  if (!force && std::filesystem::exists(out_path)) {
    std::cerr << out_path << " exists; pass --force to overwrite\n";
    return 2;
  }

  const int threads = threads_flag.value_or(cfg.threads);
  const std::uint64_t seed = seed_flag.value_or(cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  CbfGrid grid;
  try {
    grid = synthesize_grid(*cfg.spec, *cfg.sys, *cfg.field, *cfg.sub, *cfg.domain, threads, seed);
  } catch (const std::exception& e) {
    std::cerr << "synthesis failed: " << e.what() << "\n";
    return 2;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  grid.meta.config_text = cfg.raw_text;
  try {
    save_grid(grid, out_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  std::cout << "nodes " << grid.size() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "wall_seconds %.3f\n", wall);
  std::cout << buf;  // printed, deliberately never stored in the file
  return 0;
}

inline int cmd_eval(const std::string& grid_path, const std::string& state_csv) {
  try {
    const CbfGrid grid = load_grid(grid_path);
    const Vec x = parse_state(state_csv);
    if (x.size() != grid.dim())
      throw std::out_of_range("state has " + std::to_string(x.size()) + " coordinates, grid has " +
                              std::to_string(grid.dim()));
    const double v = interpolate(grid, x);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "H = %.17g\n", v);
    std::cout << buf;
    if (grid.meta.spec.saturated) {
      std::snprintf(buf, sizeof(buf), "saturation_level = %.17g\n", saturation_level(grid.meta.spec));
      std::cout << buf;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
}

inline int cmd_simulate(const std::string& config_path, const std::vector<std::string>& grid_paths,
                        const std::string& out_path, bool force) {
  RunConfig cfg;
  std::vector<CbfGrid> grids;
  try {
    cfg = parse_run_config(read_file(config_path));
    if (!cfg.sys || !cfg.has_simulate)
      throw std::invalid_argument("config: simulate needs model and simulate blocks");
    for (const auto& p : grid_paths) grids.push_back(load_grid(p));
    for (const auto& g : grids)
      if (g.meta.sys.id != cfg.sys->id)
        throw std::invalid_argument("grid model '" + g.meta.sys.id + "' != config model '" +
                                    cfg.sys->id + "'");
    if (cfg.x0.size() != cfg.sys->state_dim)
      throw std::invalid_argument("config: x0 dimension mismatch");
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  std::vector<ShiftSchedule> schedules = cfg.shifts;
  if (schedules.empty()) schedules.assign(grids.size(), constant_shift(0.0));
  if (schedules.size() == 1 && grids.size() > 1) schedules.assign(grids.size(), schedules[0]);
  if (schedules.size() != grids.size()) {
    std::cerr << "config: " << schedules.size() << " schedules for " << grids.size() << " grids\n";
    return 2;
  }

  std::vector<ObstacleCbf> obstacles;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    ObstacleCbf ob;
    ob.grid = &grids[i];
    ob.schedule = schedules[i];
    const ShiftBound bound = cfg.lambda_max ? ShiftBound{*cfg.lambda_max}
                                            : compute_capital_lambda(grids[i]);
    const ShiftReport rep = check_shiftable(ob.schedule, ob.alpha(), bound, cfg.t_end);
    if (!rep.pass) {
      std::cerr << "schedule " << i << " not shiftable: " << rep.summary() << "\n";
      if (!force) return 4;
    }
    obstacles.push_back(ob);
  }

  FilterConfig fcfg = cfg.filter;
  if (!cfg.filter_c_alpha_set && !grids.empty()) fcfg.c_alpha = grids[0].meta.spec.c_alpha;
  double dt;
  if (cfg.sim_dt)
    dt = *cfg.sim_dt;
  else if (!grids.empty())
    dt = grids[0].meta.spec.dt() / 4.0;
  else {
    std::cerr << "config: simulate.dt required when no grids are given\n";
    return 2;
  }

  try {
    SimLog log = simulate(*cfg.sys, dt, obstacles, fcfg, cfg.x0, cfg.t_end, cfg.line, cfg.gains);
    log.config_text = json::parse(cfg.raw_text).dump();
    std::ofstream os(out_path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + out_path);
    write_sim_csv(log, os);
    double min_h = std::numeric_limits<double>::infinity();
    double min_hs = std::numeric_limits<double>::infinity();
    for (const auto& r : log.rows) {
      min_h = std::min(min_h, r.h_min);
      min_hs = std::min(min_hs, r.h_shifted_min);
    }
    std::cout << "rows " << log.rows.size() << "\n";
    if (!obstacles.empty()) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "min_h %.6g\nmin_H_shifted %.6g\n", min_h, min_hs);
      std::cout << buf;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}

inline int cmd_check(const std::string& grid_path, const std::string& grid2_path,
                     const std::string& report_path) {
  CbfGrid grid;
  try {
    grid = load_grid(grid_path);
  } catch (const std::exception& e) {
    std::cerr << "load: " << e.what() << "\n";
    return 1;
  }
  GridCheckReport rep = run_grid_checks(grid);
  json jrep = grid_check_report_to_json(rep);
  bool pass = rep.pass();

  if (!grid2_path.empty()) {
    json m;
    try {
      const CbfGrid grid2 = load_grid(grid2_path);
      const MonotoneReport mono = check_monotone(grid, grid2);
      m = json{{"pass", mono.pass()},         {"rate_condition", mono.rate_condition},
               {"lambdas", mono.lambdas},     {"violations", mono.violations},
               {"worst_gap", mono.worst_gap}, {"worst_node", mono.worst_node}};
      pass = pass && mono.pass();
    } catch (const std::exception& e) {
      m = json{{"pass", false}, {"error", e.what()}};
      pass = false;
    }
    jrep["monotone"] = m;
  }

  if (!report_path.empty()) {
    std::ofstream os(report_path, std::ios::trunc);
    if (!os) {
      std::cerr << "cannot open " << report_path << "\n";
      return 1;
    }
    os << jrep.dump(2) << "\n";
  }
  for (const auto& it : rep.items)
    std::cout << (it.pass ? "PASS " : it.gated ? "FAIL " : "INFO ") << it.name << ": " << it.detail
              << "\n";
  if (jrep.contains("monotone"))
    std::cout << (jrep["monotone"]["pass"].get<bool>() ? "PASS " : "FAIL ") << "monotone\n";
  return pass ? 0 : 1;
}

inline int cmd_export(const std::string& in_path, const std::string& what,
                      const std::string& out_path) {
  try {
    std::ofstream os;
    const auto open_out = [&]() -> std::ofstream& {
      os.open(out_path, std::ios::trunc);
      if (!os) throw std::runtime_error("cannot open " + out_path);
      return os;
    };
    if (what == "trajectory") {
      std::ifstream is(in_path);
      if (!is) throw std::runtime_error("cannot open " + in_path);
      std::string line;
      std::vector<std::string> header;
      int cx0 = -1, cx1 = -1;
      open_out() << "x,y\n";
      while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cells;
        while (std::getline(ss, tok, ',')) cells.push_back(tok);
        if (header.empty()) {
          header = cells;
          for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "x0") cx0 = static_cast<int>(i);
            if (header[i] == "x1") cx1 = static_cast<int>(i);
          }
          if (cx0 < 0 || cx1 < 0) throw std::runtime_error("log lacks x0/x1 columns");
          continue;
        }
        os << cells[static_cast<std::size_t>(cx0)] << ',' << cells[static_cast<std::size_t>(cx1)]
           << "\n";
      }
      return 0;
    }
    if (what == "slice") {
      const CbfGrid grid = load_grid(in_path);
      if (grid.dim() < 2) throw std::runtime_error("slice needs a grid of rank >= 2");
      export_slice_csv(grid, 0, 1, mid_indices(grid), open_out());
      return 0;
    }
    if (what == "levelset") {
      const CbfGrid grid = load_grid(in_path);
      if (grid.dim() < 2) throw std::runtime_error("levelset needs a grid of rank >= 2");
      const auto polys = grid_zero_contour(grid, 0, 1, mid_indices(grid));
      write_contour_csv(polys, open_out());
      return 0;
    }
    std::cerr << "unknown export kind '" << what << "'\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"finite-horizon barrier synthesis and safety filtering"};
  app.require_subcommand(1);

  std::string config_path, out_path, grid_path, grid2_path, state_csv, report_path, in_path, what;
  std::vector<std::string> grid_paths;
  int threads = -1;
  std::uint64_t seed = 0;
  bool force = false;

  auto* synth = app.add_subcommand("synth", "synthesize a barrier grid");
  synth->add_option("--config", config_path)->required();
  synth->add_option("--out", out_path)->required();
  auto* threads_opt = synth->add_option("--threads", threads);
  auto* seed_opt = synth->add_option("--seed", seed);
  synth->add_flag("--force", force);

  auto* eval = app.add_subcommand("eval", "interpolate a stored grid at a state");
  eval->add_option("--grid", grid_path)->required();
  eval->add_option("--state", state_csv)->required();

  auto* sim = app.add_subcommand("simulate", "closed-loop run with the safety filter");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--out", out_path)->required();
  sim->add_option("--grid", grid_paths);
  sim->add_flag("--force", force);

  auto* check = app.add_subcommand("check", "run the grid invariant suite");
  check->add_option("--grid", grid_path)->required();
  check->add_option("--grid2", grid2_path);
  check->add_option("--report", report_path)->required();

  auto* exp = app.add_subcommand("export", "emit plot-ready CSV data");
  exp->add_option("--in", in_path)->required();
  exp->add_option("--what", what)->required();
  exp->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (synth->parsed())
    return cli_detail::cmd_synth(config_path, out_path,
                                 threads_opt->count() ? std::optional<int>(threads) : std::nullopt,
                                 seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                                 force);
  if (eval->parsed()) return cli_detail::cmd_eval(grid_path, state_csv);
  if (sim->parsed()) return cli_detail::cmd_simulate(config_path, grid_paths, out_path, force);
  if (check->parsed()) return cli_detail::cmd_check(grid_path, grid2_path, report_path);
  if (exp->parsed()) return cli_detail::cmd_export(in_path, what, out_path);
  return 2;
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("cbf");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cbf
