#pragma once

// Tabular outputs of a simulation run.

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "aggsim/io/dataset.hpp"
#include "aggsim/sim.hpp"

namespace aggsim::io {

inline void write_comparison(std::ostream& out, const std::vector<HorizonResult>& results) {
  out << "case,label,total_cost,da_energy,rt_energy,degradation,network,actors,days\n";
  for (const auto& r : results) {
    const auto& c = r.total;
    out << static_cast<int>(r.config.kind) << ",\"" << describe(r.config.kind) << "\"," << format_number(c.total())
        << ',' << format_number(c.da_energy) << ',' << format_number(c.rt_energy) << ','
        << format_number(c.degradation) << ',' << format_number(c.network) << ',' << r.actors.size() << ','
        << (r.actors.empty() ? 0 : r.actors.front().days.size()) << '\n';
  }
}

inline void write_day_results(std::ostream& out, const std::vector<HorizonResult>& results) {
  out << "case,actor,date,total_cost,da_energy,rt_energy,degradation,network,storage_in,storage_out,"
         "solve_seconds,max_stage_seconds\n";
  for (const auto& r : results) {
    for (const auto& a : r.actors) {
      for (const auto& d : a.days) {
        double sum = 0.0;
        double worst = 0.0;
        for (const auto& s : d.stages) {
          sum += s.solve_seconds;
          worst = std::max(worst, s.solve_seconds);
        }
        out << static_cast<int>(r.config.kind) << ',' << a.id << ',' << d.date << ',' << format_number(d.cost_total())
            << ',' << format_number(d.cost.da_energy) << ',' << format_number(d.cost.rt_energy) << ','
            << format_number(d.cost.degradation) << ',' << format_number(d.cost.network) << ','
            << format_number(d.storage.front()) << ',' << format_number(d.storage.back()) << ','
            << format_number(sum) << ',' << format_number(worst) << '\n';
      }
    }
  }
}

/// Hourly dispatch: storage_start is s_t, storage_end is s_{t+1}.
inline void write_dispatch(std::ostream& out, const std::vector<HorizonResult>& results) {
  out << "case,actor,date,hour,da_price,rt_price,pv,demand,commitment,rt_bid,storage_start,storage_end\n";
  for (const auto& r : results) {
    for (const auto& a : r.actors) {
      for (const auto& d : a.days) {
        for (std::size_t h = 0; h < static_cast<std::size_t>(kHoursPerDay); ++h) {
          out << static_cast<int>(r.config.kind) << ',' << a.id << ',' << d.date << ',' << h + 1 << ','
              << format_number(d.da_prices[h]) << ',' << format_number(d.rt_prices[h]) << ','
              << format_number(d.pv[h]) << ',' << format_number(d.demand[h]) << ','
              << format_number(d.schedule.commitments[h]) << ',' << format_number(d.rt_bids[h]) << ','
              << format_number(d.storage[h]) << ',' << format_number(d.storage[h + 1]) << '\n';
        }
      }
    }
  }
}

/// Reduced DA scenarios next to the realization, one row per (scenario, hour).
/// Scenario index -1 marks the realized trajectory.
inline void write_scenario_fan(std::ostream& out, const std::vector<HorizonResult>& results) {
  out << "case,actor,date,quantity,scenario,probability,hour,value\n";
  for (const auto& r : results) {
    for (const auto& a : r.actors) {
      for (const auto& d : a.days) {
        for (const auto& set : d.da_scenarios) {
          const auto& realized = set.quantity == Quantity::rt_price ? d.rt_prices
                                 : set.quantity == Quantity::pv     ? d.pv
                                                                    : d.demand;
          for (std::size_t h = 0; h < realized.size(); ++h) {
            out << static_cast<int>(r.config.kind) << ',' << a.id << ',' << d.date << ',' << to_string(set.quantity)
                << ",-1,1," << h + 1 << ',' << format_number(realized[h]) << '\n';
          }
          for (std::size_t k = 0; k < set.size(); ++k) {
            const auto& sc = set.scenarios[k];
            for (std::size_t h = 0; h < sc.values.size(); ++h) {
              out << static_cast<int>(r.config.kind) << ',' << a.id << ',' << d.date << ','
                  << to_string(set.quantity) << ',' << k << ',' << format_number(sc.probability) << ','
                  << set.first_hour + static_cast<int>(h) << ',' << format_number(sc.values[h]) << '\n';
            }
          }
        }
      }
    }
  }
}

/// Per-stage bookkeeping: scenario counts, solver iterations and wall time.
inline void write_stages(std::ostream& out, const std::vector<HorizonResult>& results) {
  out << "case,actor,date,stage_hour,raw_price,raw_pv,raw_demand,kept_price,kept_pv,kept_demand,joint,"
         "iterations,seconds\n";
  for (const auto& r : results) {
    for (const auto& a : r.actors) {
      for (const auto& d : a.days) {
        for (const auto& s : d.stages) {
          out << static_cast<int>(r.config.kind) << ',' << a.id << ',' << d.date << ',' << s.hour << ','
              << s.raw_scenarios[0] << ',' << s.raw_scenarios[1] << ',' << s.raw_scenarios[2] << ','
              << s.preserved_scenarios[0] << ',' << s.preserved_scenarios[1] << ',' << s.preserved_scenarios[2]
              << ',' << s.joint_scenarios << ',' << s.solver_iterations << ',' << format_number(s.solve_seconds)
              << '\n';
        }
      }
    }
  }
}

inline const std::vector<std::string>& result_files() {
  static const std::vector<std::string> names{"comparison.csv", "day_results.csv", "dispatch.csv",
                                              "scenario_fan.csv", "stages.csv"};
  return names;
}

inline void write_results(const std::vector<HorizonResult>& results, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  using Writer = void (*)(std::ostream&, const std::vector<HorizonResult>&);
  const std::pair<const char*, Writer> writers[] = {{"comparison.csv", write_comparison},
                                                    {"day_results.csv", write_day_results},
                                                    {"dispatch.csv", write_dispatch},
                                                    {"scenario_fan.csv", write_scenario_fan},
                                                    {"stages.csv", write_stages}};
  for (const auto& [name, write] : writers) {
    auto out = open_output(dir / name);
    write(out, results);
    if (!out) throw IoError("write failed for '" + (dir / name).string() + "'");
  }
}

/// Splits one CSV line, honoring double quotes around fields.
inline std::vector<std::string> split_quoted(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.emplace_back();
    } else if (ch != '\r') {
      out.back() += ch;
    }
  }
  return out;
}

struct ComparisonEntry {
  int case_id = 0;
  std::string label;
  CostBreakdown cost;
  double total = 0.0;
};

inline std::vector<ComparisonEntry> read_comparison(std::istream& in, const std::string& name) {
  std::vector<ComparisonEntry> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto cells = split_quoted(line);
    const std::string where = name + " line " + std::to_string(line_no);
    if (cells.size() != 9) throw ValidationError(where + ": expected 9 columns");
    ComparisonEntry e;
    e.case_id = static_cast<int>(parse_number(cells[0], where));
    e.label = cells[1];
    e.total = parse_number(cells[2], where);
    e.cost = {parse_number(cells[3], where), parse_number(cells[4], where), parse_number(cells[5], where),
              parse_number(cells[6], where)};
    rows.push_back(std::move(e));
  }
  if (rows.empty()) throw ValidationError(name + ": no rows");
  return rows;
}

}  // namespace aggsim::io
