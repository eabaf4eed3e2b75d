#pragma once

// Command-line front end. Exit codes: 0 ok, 2 validation, 3 solver, 4 I/O.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aggsim/io/config.hpp"
#include "aggsim/io/dataset.hpp"
#include "aggsim/io/results.hpp"
#include "aggsim/io/synth.hpp"
#include "aggsim/sim.hpp"

namespace aggsim::io {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitSolver = 3, kExitIo = 4 };

struct CliOptions {
  std::string config;
  std::string cases;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> days;
};

namespace detail {

inline std::vector<int> parse_case_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "1" || item == "2" || item == "3") {
      out.push_back(item[0] - '0');
    } else {
      throw ValidationError("--case: expected a comma-separated list of 1, 2, 3; got '" + text + "'");
    }
  }
  if (out.empty()) throw ValidationError("--case: empty case list");
  return out;
}

inline RunConfig effective_config(const CliOptions& o) {
  RunConfig cfg = o.config.empty() ? parse_config(Json::object()) : load_config(o.config);
  if (!o.cases.empty()) cfg.cases = parse_case_list(o.cases);
  if (o.seed) {
    cfg.seed = *o.seed;
    if (!cfg.data) cfg.synth.seed = *o.seed;
  }
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.days) cfg.window.evaluation_days = *o.days;
  cfg.validate();
  return cfg;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline int cmd_synth(const CliOptions& o, std::ostream& out) {
  RunConfig cfg = o.config.empty() ? parse_config(Json::object()) : load_config(o.config);
  if (o.seed) cfg.synth.seed = *o.seed;
  if (o.days) cfg.synth.n_days = *o.days;
  if (o.out.empty()) throw ValidationError("synth: --out <dir> is required");
  cfg.synth.battery = cfg.battery.spec();
  const auto data = synthesize(cfg.synth);
  const std::filesystem::path dir = o.out;
  const auto files = emit(data, dir);
  cfg.data = files;
  if (cfg.window.training_days + cfg.window.evaluation_days > data.days()) {
    cfg.window.training_days = std::max<std::size_t>(35, data.days() * 3 / 4);
    cfg.window.evaluation_days = data.days() - cfg.window.training_days;
  }
  cfg.output_dir = dir / "results";
  write_text(dir / "config.json", to_json(cfg, dir).dump(2) + "\n");
  out << "wrote " << data.units.size() << " units x " << data.days() << " days to " << dir.string() << "\n";
  return kExitOk;
}

inline int cmd_ingest_check(const CliOptions& o, std::ostream& out) {
  const auto cfg = effective_config(o);
  if (!cfg.data) throw ValidationError("missing config field 'data'");
  const auto data = load_dataset(cfg);
  out << "prices: " << data.rt_price.start().to_iso() << " .. " << (data.rt_price.end() - 1).to_iso() << " ("
      << data.days() << " days)\n";
  for (const auto& u : data.units) {
    double pv = 0.0;
    double d = 0.0;
    for (std::size_t i = 0; i < u.pv_history.size(); ++i) {
      pv += u.pv_history[i];
      d += u.demand_history[i];
    }
    const auto n = static_cast<double>(u.pv_history.size());
    out << "unit " << u.id << ": mean pv " << format_number(pv / n) << " kW, mean demand " << format_number(d / n)
        << " kW\n";
  }
  if (cfg.window.training_days + cfg.window.evaluation_days > data.days()) {
    throw ValidationError("dataset has " + std::to_string(data.days()) + " days; window needs " +
                          std::to_string(cfg.window.training_days + cfg.window.evaluation_days));
  }
  out << "ok\n";
  return kExitOk;
}

inline int cmd_run(const CliOptions& o, std::ostream& out) {
  const auto cfg = effective_config(o);
  const auto data = load_dataset(cfg);
  std::vector<CaseConfig> configs;
  for (int c : cfg.cases) configs.push_back(cfg.case_config(c));
  const auto results = compare_cases(configs, data, cfg.window, cfg.costs);
  write_results(results, cfg.output_dir);
  write_text(cfg.output_dir / "config.effective.json", to_json(cfg, cfg.output_dir).dump(2) + "\n");
  for (const auto& r : results) {
    out << "case " << static_cast<int>(r.config.kind) << " (" << describe(r.config.kind)
        << "): total cost " << std::fixed << std::setprecision(2) << r.total_cost() << "\n";
  }
  out << "results in " << cfg.output_dir.string() << "\n";
  return kExitOk;
}

inline int cmd_report(const CliOptions& o, std::ostream& out) {
  const std::filesystem::path dir = o.out.empty() ? effective_config(o).output_dir : std::filesystem::path(o.out);
  auto in = open_input(dir / "comparison.csv");
  const auto rows = read_comparison(in, "comparison.csv");
  double best = rows.front().total;
  for (const auto& r : rows) best = std::min(best, r.total);
  std::ostringstream md;
  md << "| case | setting | total cost | vs. best | DA energy | RT energy | degradation | network |\n";
  md << "|---|---|---:|---:|---:|---:|---:|---:|\n";
  md << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    const double rel = best != 0.0 ? 100.0 * (r.total - best) / std::abs(best) : 0.0;
    md << "| " << r.case_id << " | " << r.label << " | " << r.total << " | +" << rel << "% | " << r.cost.da_energy
       << " | " << r.cost.rt_energy << " | " << r.cost.degradation << " | " << r.cost.network << " |\n";
  }
  write_text(dir / "report.md", md.str());
  out << md.str();
  return kExitOk;
}

inline void report_error(const std::string& kind, int code, const std::string& message, const CliOptions& o,
                         std::ostream& err, const std::string& dump = {}) {
  err << "error (" << kind << "): " << message << "\n";
  Json doc{{"status", "error"}, {"kind", kind}, {"exit_code", code}, {"message", message}};
  if (o.out.empty()) return;
  try {
    std::filesystem::create_directories(o.out);
    if (!dump.empty()) {
      write_text(std::filesystem::path(o.out) / "failed_problem.mtx", dump);
      doc["problem_dump"] = "failed_problem.mtx";
    }
    write_text(std::filesystem::path(o.out) / "error.json", doc.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "could not write error report: " << e.what() << "\n";
  }
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-settlement PV + storage aggregator simulator"};
  app.require_subcommand(1);
  CliOptions o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--case", o.cases, "comma-separated cases to run (1,2,3)");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--days", o.days, "synth: days to generate; run: evaluation days")->check(CLI::PositiveNumber);
  };
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset and a config that points to it");
  auto* ingest = app.add_subcommand("ingest-check", "load and validate the configured dataset");
  auto* run = app.add_subcommand("run", "train models and simulate the selected cases");
  auto* report = app.add_subcommand("report", "summarize the comparison table of a finished run");
  for (auto* s : {synth, ingest, run, report}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error (usage): " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (synth->parsed()) return detail::cmd_synth(o, out);
    if (ingest->parsed()) return detail::cmd_ingest_check(o, out);
    if (run->parsed()) return detail::cmd_run(o, out);
    return detail::cmd_report(o, out);
  } catch (const SolverFailure& e) {
    detail::report_error("solver", kExitSolver, e.what(), o, err, e.problem_dump());
    return kExitSolver;
  } catch (const IoError& e) {
    detail::report_error("io", kExitIo, e.what(), o, err);
    return kExitIo;
  } catch (const Error& e) {
    detail::report_error("validation", kExitValidation, e.what(), o, err);
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    detail::report_error("io", kExitIo, e.what(), o, err);
    return kExitIo;
  }
}

}  // namespace aggsim::io
