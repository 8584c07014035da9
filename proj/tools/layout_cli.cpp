#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layout/config.hpp"
#include "layout/csv.hpp"
#include "layout/eval.hpp"
#include "layout/mission.hpp"

namespace fs = std::filesystem;
using namespace layout;

namespace {

DropoutSchedule parseDropouts(const std::vector<std::string>& specs) {
  DropoutSchedule sched;
  for (const auto& spec : specs) {
    DropoutWindow w;
    char stream[16] = {0};
    if (std::sscanf(spec.c_str(), "%15[^:]:%lf:%lf", stream, &w.start_s, &w.end_s) != 3) {
      throw CLI::ValidationError("dropout", "expected stream:start:end, got '" + spec + "'");
    }
    const std::string s = stream;
    if (s == "imu") w.stream = StreamId::Imu;
    else if (s == "vio") w.stream = StreamId::Vio;
    else if (s == "prism") w.stream = StreamId::Prism;
    else if (s == "depth") w.stream = StreamId::Depth;
    else if (s == "tool") w.stream = StreamId::Tool;
    else throw CLI::ValidationError("dropout", "unknown stream '" + s + "'");
    sched.windows.push_back(w);
  }
  return sched;
}

int cmdRun(const std::string& config_path, uint64_t seed_override, bool has_seed,
           const std::string& out_override, const std::vector<std::string>& dropouts) {
  RunConfig cfg = config_path.empty() ? RunConfig::defaults() : RunConfig::load(config_path);
  if (has_seed) cfg.mission.seed = seed_override;
  if (!out_override.empty()) cfg.output_dir = out_override;
  for (const auto& w : parseDropouts(dropouts).windows) {
    cfg.mission.sensors.dropouts.windows.push_back(w);
  }

  fs::create_directories(cfg.output_dir);
  cfg.save(cfg.output_dir + "/config.json");

  MissionRunner runner(cfg.mission);
  const MissionResult result = runner.run(cfg.output_dir);

  std::printf("mission %s: %zu marks, %d failures, %.1f s\n",
              result.completed ? "completed" : "aborted", result.marks.size(), result.failures,
              result.duration_s);
  if (!cfg.mission.sensors.dropouts.windows.empty()) {
    std::printf("dropout windows active: global accuracy degraded during outages\n");
  }
  return result.completed ? 0 : 1;
}

int cmdReplay(const std::string& run_dir, const std::string& out_dir,
              const std::vector<std::string>& dropouts, bool with_global) {
  const MeasurementLog log = MeasurementLog::read(run_dir);
  RunConfig cfg;
  const std::string config_path = run_dir + "/config.json";
  if (fs::exists(config_path)) cfg = RunConfig::load(config_path);

  GlobalEstimatorConfig global_cfg = cfg.mission.global;
  const ReplayOutput out = replayEstimators(log, cfg.mission.local,
                                            with_global ? &global_cfg : nullptr,
                                            parseDropouts(dropouts),
                                            cfg.mission.local.optimize_rate_hz,
                                            cfg.mission.global.optimize_rate_hz);

  fs::create_directories(out_dir);
  writeLocalStatesCsv(out_dir + "/local_estimate.csv", out.local_states);
  if (with_global) writeGlobalStatesCsv(out_dir + "/global_estimate.csv", out.global_states);
  std::printf("replayed %zu local states (%d measurements dropped)\n", out.local_states.size(),
              out.dropped_local);
  return 0;
}

int cmdEval(const std::string& run_dir) {
  const std::string marks_path = run_dir + "/marks.csv";
  if (!fs::exists(marks_path)) {
    std::fprintf(stderr, "missing artifact: %s\n", marks_path.c_str());
    return 1;
  }
  const std::vector<MarkRecord> marks = readMarksCsv(marks_path);
  if (marks.empty()) {
    std::fprintf(stderr, "no marks recorded in %s\n", marks_path.c_str());
    return 1;
  }

  const AccuracyReport acc = absoluteAccuracy(marks);
  writeAccuracyCsv(run_dir + "/accuracy.csv", acc);
  std::printf("absolute: MAE %.2f mm, STD %.2f mm, P90 %.2f mm, %.0f%% within 10 mm\n",
              acc.mae * 1e3, acc.std_dev * 1e3, acc.p90 * 1e3,
              acc.fraction_within_10mm * 100.0);

  if (marks.size() >= 2) {
    std::vector<Vec2> measured, nominal;
    for (const auto& m : marks) {
      measured.emplace_back(m.actual.head<2>());
      nominal.emplace_back(m.commanded.head<2>());
    }
    const PrecisionReport prec = procrustesAlign(measured, nominal);
    writePrecisionCsv(run_dir + "/precision.csv", prec);
    std::printf("relative: mean point-wise deviation %.2f mm (rotation %.3f deg)\n",
                prec.mean_deviation * 1e3, prec.rotation_angle * 180.0 / M_PI);
  }
  return 0;
}

int cmdAblate(const std::string& out_path, double duration_s, uint64_t seed) {
  struct Variant {
    const char* name;
    bool contact, compliance, actuation;
  };
  const std::vector<Variant> variants = {
      {"full", true, true, true},
      {"actuated_rigid", true, false, true},
      {"frictionless", true, false, false},
      {"spring_no_actuation", true, true, false},
      {"free_flight", false, false, false},
  };

  CsvWriter w(out_path, {"variant", "mae_mm", "std_mm", "p90_mm"});
  std::printf("%-22s %10s %10s %10s\n", "variant", "MAE [mm]", "STD [mm]", "P90 [mm]");
  for (const auto& v : variants) {
    AblationConfig cfg;
    cfg.contact = v.contact;
    cfg.compliance = v.compliance;
    cfg.actuation = v.actuation;
    cfg.duration_s = duration_s;
    cfg.seed = seed;
    const std::vector<double> errors = runAblationVariant(cfg);

    std::vector<MarkRecord> recs;
    for (double e : errors) {
      MarkRecord r;
      r.actual = Vec3(e, 0, 0);
      recs.push_back(r);
    }
    const AccuracyReport rep = absoluteAccuracy(recs);
    w.field(std::string(v.name));
    w.field(rep.mae * 1e3).field(rep.std_dev * 1e3).field(rep.p90 * 1e3);
    w.endRow();
    std::printf("%-22s %10.2f %10.2f %10.2f\n", v.name, rep.mae * 1e3, rep.std_dev * 1e3,
                rep.p90 * 1e3);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aerial ceiling-layouting simulation and estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir;
  uint64_t seed = 0;
  std::vector<std::string> dropouts;
  bool with_global = true;
  double duration = 60.0;

  auto* run = app.add_subcommand("run", "run a closed-loop mission");
  run->add_option("-c,--config", config_path, "config JSON (defaults used when omitted)");
  auto* seed_opt = run->add_option("-s,--seed", seed, "override the run seed");
  run->add_option("-o,--output", out_dir, "output directory override");
  run->add_option("--dropout", dropouts, "extra dropout window stream:start:end (repeatable)");

  auto* replay = app.add_subcommand("replay", "re-run estimators on recorded streams");
  replay->add_option("run_dir", run_dir, "directory with recorded measurement CSVs")->required();
  replay->add_option("-o,--output", out_dir, "output directory")->required();
  replay->add_option("--remove", dropouts, "sparsification window stream:start:end (repeatable)");
  replay->add_flag("!--no-global", with_global, "skip the global estimator");

  auto* eval = app.add_subcommand("eval", "evaluate marks of a finished run");
  eval->add_option("run_dir", run_dir, "run directory containing marks.csv")->required();

  auto* ablate = app.add_subcommand("ablate", "circular-trajectory mechanical ablations");
  ablate->add_option("-o,--output", out_dir, "output CSV path")->default_str("ablation.csv");
  ablate->add_option("--duration", duration, "seconds per variant");
  ablate->add_option("-s,--seed", seed, "simulation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmdRun(config_path, seed, seed_opt->count() > 0, out_dir, dropouts);
    }
    if (replay->parsed()) return cmdReplay(run_dir, out_dir, dropouts, with_global);
    if (eval->parsed()) return cmdEval(run_dir);
    if (ablate->parsed()) {
      return cmdAblate(out_dir.empty() ? "ablation.csv" : out_dir, duration, seed ? seed : 7);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
