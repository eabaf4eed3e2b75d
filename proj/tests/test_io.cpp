#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aggsim/io/cli.hpp"

using namespace aggsim;
using namespace aggsim::io;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("aggsim_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n - 1;
}

SynthSpec small_spec(std::uint64_t seed = 3) {
  SynthSpec s;
  s.seed = seed;
  s.n_units = 2;
  s.n_days = 40;
  return s;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "aggsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kPriceHeader = "timestamp,da_price,rt_price\n";
const char* kUnitHeader = "timestamp,pv_kw,demand_kw\n";

}  // namespace

TEST(Csv, EmitThenIngestIsExact) {
  const auto dir = fresh_dir("roundtrip");
  const auto data = synthesize(small_spec());
  const auto files = emit(data, dir);
  ASSERT_EQ(files.units.size(), 2u);
  const auto back = ingest(files, data.units[0].battery);
  ASSERT_EQ(back.rt_price.size(), data.rt_price.size());
  EXPECT_EQ(back.rt_price.start(), data.rt_price.start());
  for (std::size_t i = 0; i < data.rt_price.size(); ++i) {
    ASSERT_EQ(back.rt_price[i], data.rt_price[i]);
    ASSERT_EQ(back.da_price[i], data.da_price[i]);
    for (std::size_t u = 0; u < 2; ++u) {
      ASSERT_EQ(back.units[u].pv_history[i], data.units[u].pv_history[i]);
      ASSERT_EQ(back.units[u].demand_history[i], data.units[u].demand_history[i]);
    }
  }
  EXPECT_EQ(back.units[1].id, data.units[1].id);
}

TEST(Csv, MissingHourIsReportedWithItsLine) {
  std::istringstream in(std::string(kPriceHeader) +
                        "2011-08-05T00:00:00,1,2\n"
                        "2011-08-05T01:00:00,1,2\n"
                        "2011-08-05T03:00:00,1,2\n");
  const auto msg = message_of([&] { read_prices(in, "prices.csv"); });
  EXPECT_NE(msg.find("prices.csv line 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("missing hour 2011-08-05T02:00:00"), std::string::npos) << msg;
}

TEST(Csv, DuplicateHourIsRejected) {
  std::istringstream in(std::string(kPriceHeader) + "2011-08-05T00:00:00,1,2\n2011-08-05T00:00:00,1,2\n");
  EXPECT_THROW(read_prices(in, "prices.csv"), ValidationError);
}

TEST(Csv, NegativePvNamesTheRow) {
  std::istringstream in(std::string(kUnitHeader) + "2011-08-05T00:00:00,0,1\n2011-08-05T01:00:00,-0.5,1\n");
  const auto msg = message_of([&] { read_unit(in, "u", BatterySpec{}, "u.csv"); });
  EXPECT_NE(msg.find("data row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("negative PV"), std::string::npos) << msg;
}

TEST(Csv, NegativeDemandIsRejected) {
  std::istringstream in(std::string(kUnitHeader) + "2011-08-05T00:00:00,0,-1\n");
  const auto msg = message_of([&] { read_unit(in, "u", BatterySpec{}, "u.csv"); });
  EXPECT_NE(msg.find("negative demand"), std::string::npos) << msg;
}

TEST(Csv, MalformedInputs) {
  {
    std::istringstream in("time,da,rt\n");
    EXPECT_THROW(read_prices(in, "p"), ValidationError);
  }
  {
    std::istringstream in(std::string(kPriceHeader) + "2011-08-05T00:00:00,abc,2\n");
    const auto msg = message_of([&] { read_prices(in, "p"); });
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  }
  {
    std::istringstream in(std::string(kPriceHeader) + "2011-08-05T00:00:00,1\n");
    EXPECT_THROW(read_prices(in, "p"), ValidationError);
  }
  {
    std::istringstream in(std::string(kPriceHeader) + "2011-08-05 00:00,1,2\n");
    EXPECT_THROW(read_prices(in, "p"), ValidationError);
  }
  {
    std::istringstream in("");
    EXPECT_THROW(read_prices(in, "p"), ValidationError);
  }
  {
    std::istringstream in(kPriceHeader);
    EXPECT_THROW(read_prices(in, "p"), ValidationError);
  }
}

TEST(Csv, CrlfIsAccepted) {
  std::istringstream in("timestamp,da_price,rt_price\r\n2011-08-05T00:00:00,1.5,2\r\n");
  const auto p = read_prices(in, "p");
  ASSERT_EQ(p.da.size(), 1u);
  EXPECT_DOUBLE_EQ(p.da[0], 1.5);
}

TEST(Csv, MissingFileIsAnIoError) {
  DatasetFiles files{"/nonexistent/prices.csv", {"/nonexistent/u.csv"}};
  EXPECT_THROW(ingest(files, BatterySpec{}), IoError);
}

TEST(Csv, UnitsMustCoverThePriceRange) {
  const auto dir = fresh_dir("misaligned");
  const auto data = synthesize(small_spec());
  auto files = emit(data, dir);
  write_file(files.units[1], std::string(kUnitHeader) + "2011-08-05T00:00:00,0,1\n");
  EXPECT_THROW(ingest(files, BatterySpec{}), ValidationError);
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto cfg = parse_config(Json::object());
  EXPECT_FALSE(cfg.data.has_value());
  EXPECT_EQ(cfg.cases, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(cfg.window.training_days, 180u);
  EXPECT_EQ(cfg.window.evaluation_days, 28u);
  EXPECT_EQ(cfg.n_raw, 50u);
  EXPECT_EQ(cfg.k_preserve, 5u);
  EXPECT_DOUBLE_EQ(cfg.battery.spec().s_init, 2.5);
}

TEST(Config, UnknownFieldIsNamed) {
  const auto msg = message_of([] { parse_config(Json::parse(R"({"costs": {"alpah": 1}})")); });
  EXPECT_NE(msg.find("unknown config field 'costs.alpah'"), std::string::npos) << msg;
  EXPECT_THROW(parse_config(Json::parse(R"({"sedd": 1})")), ValidationError);
}

TEST(Config, MissingRequiredFieldIsNamed) {
  const auto msg = message_of([] { parse_config(Json::parse(R"({"data": {"prices": "p.csv"}})")); });
  EXPECT_NE(msg.find("missing config field 'data.units'"), std::string::npos) << msg;
}

TEST(Config, WrongTypesAndValues) {
  EXPECT_THROW(parse_config(Json::parse(R"({"seed": "one"})")), ValidationError);
  EXPECT_THROW(parse_config(Json::parse(R"({"scenarios": {"n_raw": -3}})")), ValidationError);
  EXPECT_THROW(parse_config(Json::parse(R"({"cases": [4]})")), ValidationError);
  EXPECT_THROW(parse_config(Json::parse(R"({"battery": {"efficiency": 1.5}})")), ValidationError);
  EXPECT_THROW(parse_config(Json::parse(R"({"scenarios": {"n_raw": 3, "k_preserve": 5}})")), ValidationError);
  EXPECT_THROW(parse_config(Json::parse(R"({"sarima": {"pv": {"D": 3}}})")), ValidationError);
  EXPECT_THROW(parse_config(Json::parse(R"({"synth": {"start": "2011-08-05T01:00:00"}})")), ValidationError);
}

TEST(Config, SynthPriceParametersAreChecked) {
  const std::pair<const char*, const char*> cases[] = {
      {R"({"synth": {"spike_probability": 1.5}})", "synth.spike_probability"},
      {R"({"synth": {"spike_scale": -1}})", "synth.spike_scale"},
      {R"({"synth": {"spread_persistence": 1.0}})", "synth.spread_persistence"},
      {R"({"synth": {"spread_noise": -0.1}})", "synth.spread_noise"},
  };
  for (const auto& [doc, field] : cases) {
    const auto msg = message_of([doc = doc] { parse_config(Json::parse(doc)); });
    EXPECT_NE(msg.find(field), std::string::npos) << doc << " -> " << msg;
  }
}

TEST(Config, EffectiveConfigRoundTrips) {
  auto cfg = parse_config(Json::parse(
      R"({"seed": 9, "cases": [2], "costs": {"alpha": 0.3}, "synth": {"spread_noise": 0.05},
          "sarima": {"pv": {"p": 2, "q": 0}}, "window": {"training_days": 40, "evaluation_days": 3}})"));
  const auto back = parse_config(to_json(cfg));
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.cases, std::vector<int>{2});
  EXPECT_DOUBLE_EQ(back.costs.alpha, 0.3);
  EXPECT_DOUBLE_EQ(back.synth.spread_noise, 0.05);
  EXPECT_EQ(back.pv_orders, cfg.pv_orders);
  EXPECT_EQ(back.window.training_days, 40u);
  EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(Synth, SameSeedSameData) {
  const auto a = synthesize(small_spec(7));
  const auto b = synthesize(small_spec(7));
  const auto c = synthesize(small_spec(8));
  auto vec = [](const HourlySeries& s) { return std::vector<double>(s.values().begin(), s.values().end()); };
  EXPECT_EQ(vec(a.rt_price), vec(b.rt_price));
  EXPECT_EQ(vec(a.units[1].pv_history), vec(b.units[1].pv_history));
  EXPECT_NE(vec(a.rt_price), vec(c.rt_price));
}

TEST(Synth, NightHoursHaveNoPv) {
  SynthSpec spec;
  spec.n_days = 200;
  const auto data = synthesize(spec);
  for (const auto& u : data.units) {
    for (std::size_t i = 0; i < u.pv_history.size(); ++i) {
      const auto h = i % 24;
      if (h <= 3 || h >= 21) {
        ASSERT_EQ(u.pv_history[i], 0.0) << u.id << " index " << i;
      }
    }
  }
}

TEST(Synth, DemandMeanMatchesTheLevel) {
  SynthSpec spec;
  spec.n_days = 200;
  const auto data = synthesize(spec);
  double all = 0.0;
  for (const auto& u : data.units) {
    double sum = 0.0;
    for (double v : u.demand_history.values()) sum += v;
    const double mean = sum / static_cast<double>(u.demand_history.size());
    // Unit scales lie in [0.8, 1.2].
    EXPECT_GT(mean, 0.8 * spec.demand_level_kw * 0.9) << u.id;
    EXPECT_LT(mean, 1.2 * spec.demand_level_kw * 1.1) << u.id;
    all += mean;
  }
  EXPECT_NEAR(all / static_cast<double>(data.units.size()), spec.demand_level_kw, 0.1 * spec.demand_level_kw);
}

TEST(Synth, RejectsBadSpecs) {
  auto s = small_spec();
  s.n_days = 10;
  EXPECT_THROW(synthesize(s), InvalidArgument);
  s = small_spec();
  s.spread_persistence = 1.0;
  EXPECT_THROW(synthesize(s), InvalidArgument);
}

TEST(Cli, SynthRunReport) {
  const auto dir = fresh_dir("cli");
  auto r = cli({"synth", "--out", (dir / "data").string(), "--days", "40", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(dir / "data" / "config.json"));
  ASSERT_TRUE(fs::exists(dir / "data" / "prices.csv"));

  r = cli({"ingest-check", "--config", (dir / "data" / "config.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ok"), std::string::npos);

  const auto res = dir / "res";
  r = cli({"run", "--config", (dir / "data" / "config.json").string(), "--case", "1,2,3", "--days", "1", "--out",
           res.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& name : result_files()) EXPECT_TRUE(fs::exists(res / name)) << name;
  EXPECT_TRUE(fs::exists(res / "config.effective.json"));
  EXPECT_EQ(data_rows(res / "comparison.csv"), 3u);
  // Cases 1 and 2 simulate the aggregate, case 3 each of the 6 units.
  EXPECT_EQ(data_rows(res / "day_results.csv"), 8u);
  EXPECT_EQ(data_rows(res / "dispatch.csv"), 8u * 24u);
  EXPECT_EQ(data_rows(res / "stages.csv"), 8u * 25u);

  std::ifstream cmp(res / "comparison.csv");
  const auto rows = read_comparison(cmp, "comparison.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[i].case_id, static_cast<int>(i) + 1);
    EXPECT_NEAR(rows[i].total,
                rows[i].cost.da_energy + rows[i].cost.rt_energy + rows[i].cost.degradation + rows[i].cost.network,
                1e-9 * (1.0 + std::abs(rows[i].total)));
  }

  r = cli({"report", "--out", res.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(res / "report.md"));
  EXPECT_NE(r.out.find("| 3 |"), std::string::npos);
}

TEST(Cli, ValidationErrorsExitTwoAndLeaveAReport) {
  const auto dir = fresh_dir("cli_validation");
  write_file(dir / "bad.json", R"({"costs": {"alpah": 1}})");
  auto r = cli({"run", "--config", (dir / "bad.json").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("costs.alpah"), std::string::npos) << r.err;
  const auto doc = Json::parse(read_file(dir / "o" / "error.json"));
  EXPECT_EQ(doc["exit_code"], 2);
  EXPECT_EQ(doc["kind"], "validation");

  EXPECT_EQ(cli({"run", "--case", "4"}).code, 2);
  EXPECT_EQ(cli({"run", "--bogus"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  write_file(dir / "broken.json", "{ not json");
  EXPECT_EQ(cli({"run", "--config", (dir / "broken.json").string()}).code, 2);
}

TEST(Cli, GapInDataExitsTwo) {
  const auto dir = fresh_dir("cli_gap");
  ASSERT_EQ(cli({"synth", "--out", dir.string(), "--days", "40"}).code, 0);
  auto text = read_file(dir / "prices.csv");
  const auto pos = text.find("2011-08-06T05:00:00");
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos, text.find('\n', pos) - pos + 1);
  write_file(dir / "prices.csv", text);
  const auto r = cli({"ingest-check", "--config", (dir / "config.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing hour 2011-08-06T05:00:00"), std::string::npos) << r.err;
}

TEST(Cli, MissingFilesExitFour) {
  const auto dir = fresh_dir("cli_io");
  auto r = cli({"run", "--config", (dir / "absent.json").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(Json::parse(read_file(dir / "o" / "error.json"))["exit_code"], 4);
  EXPECT_EQ(cli({"report", "--out", (dir / "nothing").string()}).code, 4);
}

TEST(Cli, SolverFailureExitsThreeWithADump) {
  const auto dir = fresh_dir("cli_solver");
  ASSERT_EQ(cli({"synth", "--out", dir.string(), "--days", "40"}).code, 0);
  auto cfg = Json::parse(read_file(dir / "config.json"));
  cfg["solver"]["max_iterations"] = 1;
  cfg["cases"] = {2};
  cfg["window"]["evaluation_days"] = 1;
  write_file(dir / "config.json", cfg.dump());
  const auto r = cli({"run", "--config", (dir / "config.json").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(fs::exists(dir / "o" / "failed_problem.mtx"));
  EXPECT_EQ(Json::parse(read_file(dir / "o" / "error.json"))["kind"], "solver");
}
