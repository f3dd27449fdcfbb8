// permnet: command-line driver for data generation, training, evaluation,
// the EDF baseline, the complexity sweeps and the method comparison.

#include "permnet/bench.hpp"
#include "permnet/dataset.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace permnet;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--config", c.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the configured seed");
  cmd->add_option("--out", c.out, out_help)->required();
}

BenchConfig load_config(const Common& c) {
  ConfigMap map = c.config_path.empty() ? ConfigMap::parse("", "<defaults>")
                                        : ConfigMap::load(c.config_path);
  if (c.seed) map.set("seed", std::to_string(*c.seed));
  return BenchConfig::from_config(map);
}

RecordHeader header(const BenchConfig& cfg) {
  return {"", kDatasetVersion, cfg.config_hash, cfg.seed()};
}

std::vector<Scenario> train_set(const BenchConfig& cfg, const std::string& data_path) {
  if (!data_path.empty()) return read_scenarios(data_path);
  return generate_scenarios(cfg.net, cfg.train_count, cfg.seed(), Stream::Scenario, false);
}

struct TestSet {
  std::vector<Scenario> scenarios;
  std::vector<PlanSolution> oracle;
};

TestSet test_set(const BenchConfig& cfg) {
  TestSet t;
  t.scenarios = generate_scenarios(cfg.net, cfg.test_count, cfg.seed(), Stream::TestScenario,
                                   true, &t.oracle);
  return t;
}

// Model files are staged like every other output.
void save_model(const std::string& path, const TrainState& state) {
  const std::string staging = path + ".partial";
  try {
    save_checkpoint(staging, state);
    fs::rename(staging, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(staging, ec);
    throw;
  }
}

std::vector<CsvCell> report_cells(const GapReport& r) {
  return {r.gap, r.raw_gap, r.mean_capacity_violation, r.max_capacity_violation,
          r.mean_qos_residual, static_cast<long long>(r.users_short)};
}

const std::vector<std::string> kReportColumns{
    "gap", "raw_gap", "mean_capacity_violation", "max_capacity_violation",
    "mean_qos_residual", "users_short"};

std::vector<std::string> with_report(std::vector<std::string> head) {
  head.insert(head.end(), kReportColumns.begin(), kReportColumns.end());
  return head;
}

std::vector<CsvCell> with_report(std::vector<CsvCell> head, const GapReport& r) {
  const auto tail = report_cells(r);
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permutation-equivariant transmission planning"};
  app.require_subcommand(1);

  Common gen;
  std::string split = "train";
  int count = 0;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a scenario dataset (JSONL)");
  add_common(gen_cmd, gen, "scenario file");
  gen_cmd->add_option("--split", split, "train (k_max users) or test (random users)")
      ->check(CLI::IsMember({"train", "test"}));
  gen_cmd->add_option("--count", count, "number of scenarios (default from config)");

  Common orc;
  std::string orc_data;
  auto* orc_cmd = app.add_subcommand("oracle", "solve the planning LP for a dataset");
  add_common(orc_cmd, orc, "plan file (JSONL)");
  orc_cmd->add_option("--data", orc_data, "scenario file")->required()->check(CLI::ExistingFile);

  Common trn;
  std::string trn_data, trn_log;
  auto* trn_cmd = app.add_subcommand("train", "train DNN-s and DNN-nu");
  add_common(trn_cmd, trn, "model file");
  trn_cmd->add_option("--data", trn_data, "training scenarios (default: generated)")
      ->check(CLI::ExistingFile);
  trn_cmd->add_option("--log", trn_log, "per-epoch CSV log");

  Common evl;
  std::string evl_model;
  auto* evl_cmd = app.add_subcommand("eval", "optimality gap of a trained model");
  add_common(evl_cmd, evl, "CSV report");
  evl_cmd->add_option("--model", evl_model, "model file")->required()->check(CLI::ExistingFile);

  Common bl;
  auto* bl_cmd = app.add_subcommand("baseline", "run the EDF baseline on the test set");
  add_common(bl_cmd, bl, "CSV with one row per trial");

  Common ss;
  auto* ss_cmd = app.add_subcommand("sweep-samples", "gap vs training-set size");
  add_common(ss_cmd, ss, "CSV curve");

  Common es;
  bool varied = false;
  auto* es_cmd = app.add_subcommand("sweep-epochs", "gap vs training epochs");
  add_common(es_cmd, es, "CSV log");
  es_cmd->add_flag("--varied-sizes", varied, "draw file sizes from the varied range");

  Common cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "optimal vs learned vs EDF completion times");
  add_common(cmp_cmd, cmp, "CSV summary");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      const auto cfg = load_config(gen);
      const bool test = split == "test";
      const int n = count > 0 ? count : (test ? cfg.test_count : cfg.train_count);
      const auto scs = generate_scenarios(cfg.net, n, cfg.seed(),
                                          test ? Stream::TestScenario : Stream::Scenario, test);
      write_scenarios(gen.out, header(cfg), scs);
      std::cout << "wrote " << scs.size() << " scenarios to " << gen.out << "\n";
    } else if (orc_cmd->parsed()) {
      const auto cfg = load_config(orc);
      const auto plans = solve_all(read_scenarios(orc_data));
      write_plans(orc.out, header(cfg), plans);
      std::cout << "wrote " << plans.size() << " plans to " << orc.out << "\n";
    } else if (trn_cmd->parsed()) {
      const auto cfg = load_config(trn);
      const auto data = train_set(cfg, trn_data);
      std::vector<Matrix> labels;
      if (cfg.train.mode == Supervision::Supervised) labels = oracle_labels(solve_all(data));
      const auto test = test_set(cfg);
      std::optional<CsvWriter> log;
      if (!trn_log.empty()) {
        log.emplace(trn_log, cfg.config_hash, cfg.seed(), with_report({"epoch", "loss"}));
      }
      const auto st = train(data, cfg.train, labels, [&](const TrainState& s) {
        if (log) {
          log->row(with_report({static_cast<long long>(s.epoch), s.loss_history.back()},
                               evaluate_gap(s, test.scenarios, test.oracle)));
        }
        return true;
      });
      save_model(trn.out, st);
      if (log) log->commit();
      const auto r = evaluate_gap(st, test.scenarios, test.oracle);
      std::cout << "trained " << st.epoch << " epochs; test gap " << r.gap << "\n";
    } else if (evl_cmd->parsed()) {
      const auto cfg = load_config(evl);
      const auto st = load_checkpoint(evl_model, cfg.train);
      const auto test = test_set(cfg);
      const auto r = evaluate_gap(st, test.scenarios, test.oracle);
      CsvWriter out(evl.out, cfg.config_hash, cfg.seed(), with_report({"scenarios"}));
      out.row(with_report({static_cast<long long>(r.scenarios)}, r));
      out.commit();
      std::cout << "gap " << r.gap << " raw_gap " << r.raw_gap << "\n";
    } else if (bl_cmd->parsed()) {
      const auto cfg = load_config(bl);
      const auto test = test_set(cfg);
      CsvWriter out(bl.out, cfg.config_hash, cfg.seed(),
                    {"trial", "users", "edf_mean_time_s", "optimal_mean_time_s", "incomplete"});
      for (std::size_t n = 0; n < test.scenarios.size(); ++n) {
        const auto& sc = test.scenarios[n];
        Rng rng = substream(cfg.seed(), Stream::Fading, n);
        const auto edf = edf_schedule(sc, rng, cfg.net);
        out.row({static_cast<long long>(n), static_cast<long long>(sc.num_users),
                 edf.mean_time(), test.oracle[n].objective * cfg.net.frame_s / sc.num_users,
                 static_cast<long long>(edf.incomplete())});
      }
      out.commit();
      std::cout << "wrote " << test.scenarios.size() << " trials to " << bl.out << "\n";
    } else if (ss_cmd->parsed()) {
      const auto cfg = load_config(ss);
      const int largest = cfg.sweep_sizes.back();
      const auto pool =
          generate_scenarios(cfg.net, largest, cfg.seed(), Stream::Scenario, false);
      const auto test = test_set(cfg);
      CsvWriter out(ss.out, cfg.config_hash, cfg.seed(), with_report({"sharing", "size"}));
      for (const bool sharing : {true, false}) {
        auto tc = cfg.train;
        tc.sharing = sharing;
        const auto sweep = sample_complexity_sweep(pool, cfg.sweep_sizes, tc, test.scenarios,
                                                   test.oracle, cfg.target_gap);
        for (const auto& p : sweep.curve) {
          out.row(with_report({static_cast<long long>(sharing), static_cast<long long>(p.size)},
                              p.report));
        }
        std::cout << (sharing ? "sharing" : "no sharing") << ": threshold "
                  << (sweep.threshold ? std::to_string(*sweep.threshold) : "not reached")
                  << "\n";
      }
      out.commit();
    } else if (es_cmd->parsed()) {
      auto cfg = load_config(es);
      if (varied) {
        cfg.net.file_bits_min = cfg.varied_file_bits_min;
        cfg.net.file_bits_max = cfg.varied_file_bits_max;
      }
      const auto data = train_set(cfg, "");
      const auto test = test_set(cfg);
      CsvWriter out(es.out, cfg.config_hash, cfg.seed(),
                    with_report({"sharing", "epoch", "loss"}));
      for (const bool sharing : {true, false}) {
        auto tc = cfg.train;
        tc.sharing = sharing;
        const auto sweep = epoch_sweep(data, tc, test.scenarios, test.oracle, cfg.epoch_budget,
                                       cfg.target_gap, false);
        for (const auto& p : sweep.log) {
          out.row(with_report({static_cast<long long>(sharing), static_cast<long long>(p.epoch),
                               p.loss},
                              p.report));
        }
        std::cout << (sharing ? "sharing" : "no sharing") << ": epochs to target "
                  << (sweep.epochs_to_target ? std::to_string(*sweep.epochs_to_target)
                                             : "not reached")
                  << "\n";
      }
      out.commit();
    } else if (cmp_cmd->parsed()) {
      const auto cfg = load_config(cmp);
      const auto data = train_set(cfg, "");
      const auto test = test_set(cfg);
      auto tc = cfg.train;
      tc.mode = Supervision::Unsupervised;
      const auto proposed = train(data, tc);
      tc.mode = Supervision::Supervised;
      const auto supervised = train(data, tc, oracle_labels(solve_all(data)));
      const auto rows =
          compare_methods(test.scenarios, test.oracle, proposed, &supervised, cfg.net, cfg.seed());
      CsvWriter out(cmp.out, cfg.config_hash, cfg.seed(),
                    {"method", "trials", "users", "mean_time_s", "mean_capacity_violation",
                     "max_capacity_violation", "incomplete"});
      for (const auto& r : rows) {
        out.row({r.method, static_cast<long long>(r.trials), static_cast<long long>(r.users),
                 r.mean_time_s, r.mean_capacity_violation, r.max_capacity_violation,
                 static_cast<long long>(r.incomplete)});
        std::cout << r.method << ": mean time " << r.mean_time_s << " s\n";
      }
      out.commit();
    }
  } catch (const std::exception& e) {
    std::cerr << "permnet: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
