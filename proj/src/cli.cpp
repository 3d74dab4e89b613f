#include "vidtraj/cli.hpp"

#include "vidtraj/config.hpp"
#include "vidtraj/io.hpp"
#include "vidtraj/pipeline.hpp"
#include "vidtraj/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

namespace vidtraj::cli {

namespace fs = std::filesystem;

ExitCode exit_code_for(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::parse_error:
    case Errc::io_failure:
    case Errc::unknown_scenario:
    case Errc::denormalized_quaternion:
    case Errc::non_monotonic_frames:
    case Errc::non_monotonic_timestamps:
    case Errc::length_mismatch:
      return input_error;
    case Errc::degenerate_configuration:
    case Errc::no_valid_pose:
    case Errc::point_behind_camera:
    case Errc::robot_outside_frustum:
      return degenerate;
    case Errc::no_overlap:
    case Errc::empty_sequence:
    case Errc::too_few_points:
    case Errc::diverged_refinement:
    case Errc::singular_innovation:
    case Errc::non_positive_dt:
      return pipeline_error;
    case Errc::frame_mismatch:
      return internal_error;
  }
  return internal_error;
}

namespace {

// Files are staged next to their destination and renamed only once every
// output of the command has been produced.
class OutputSet {
 public:
  void add(const fs::path& path, std::string content) { files_.emplace_back(path, std::move(content)); }

  void commit() {
    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
      for (const auto& [path, content] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".tmp";
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << content;
        f.close();
        if (!f) fail(Errc::io_failure, "cannot write " + tmp.string());
        staged.emplace_back(tmp, path);
      }
      for (const auto& [tmp, path] : staged) fs::rename(tmp, path);
    } catch (const fs::filesystem_error& e) {
      for (const auto& [tmp, path] : staged) fs::remove(tmp);
      fail(Errc::io_failure, e.what());
    } catch (...) {
      std::error_code ec;
      for (const auto& [tmp, path] : staged) fs::remove(tmp, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

template <typename Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Config file (dotted.key = value)")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Override one config key, key=value (repeatable)");
  }

  PipelineConfig load() const {
    PipelineConfig c = config_path.empty() ? PipelineConfig{} : read_config_file(config_path);
    for (const auto& o : overrides) apply_override(c, o);
    validate(c);
    return c;
  }
};

std::string keys_footer() {
  std::ostringstream s;
  s << "Config keys (for --config files and --set key=value):\n";
  for (const auto& k : config_keys()) s << "  " << std::left << std::setw(28) << k.key << k.description << '\n';
  s << "\nExit codes: 0 ok, 2 input/parse error, 3 degenerate geometry, 4 pipeline failure, 5 internal error.";
  return s.str();
}

Eigen::Vector2d parse_goal(const std::string& s) {
  const auto comma = s.find(',');
  double x = 0, y = 0;
  if (comma == std::string::npos) fail(Errc::parse_error, "goal must be x,y");
  try {
    std::size_t nx = 0, ny = 0;
    x = std::stod(s.substr(0, comma), &nx);
    y = std::stod(s.substr(comma + 1), &ny);
    if (nx != comma || ny != s.size() - comma - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    fail(Errc::parse_error, "goal must be x,y, got '" + s + "'");
  }
  return {x, y};
}

GroundTrack load_ground(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_ground_track(in, path);
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  ConfigArgs config;
  std::string detections, poses, out_dir, truth, goal, executor = "differential_drive";
};

int do_extract(const ExtractArgs& a, std::ostream& out) {
  const PipelineConfig c = a.config.load();
  const ExecutorKind kind = parse_executor(a.executor);
  std::optional<GroundTrack> truth;
  if (!a.truth.empty()) {
    truth = load_ground(a.truth);
    if (truth->empty()) fail(Errc::parse_error, a.truth + ": empty truth track");
  }
  std::istringstream det_in(read_file(a.detections));
  const auto dets = read_detections(det_in, a.detections);
  std::istringstream pose_in(read_file(a.poses));
  const auto poses = read_camera_poses(pose_in, PoseIngestOptions::from(c), a.poses);

  const Association assoc = associate(dets, poses, c.frame_rate);
  const ExtractionResult ex = extract_trajectory(assoc.observations, c.intrinsics,
                                                 RobotModel(c.robot_width, c.robot_height), c.filter);
  const GroundTrack executed = execute(ex.ground, kind, c.executor);
  // Without a truth track the executed path is the reference.
  const GroundTrack& reference = truth ? *truth : executed;
  const Eigen::Vector2d goal = !a.goal.empty() ? parse_goal(a.goal)
                               : truth         ? truth->back().xy()
                                               : ex.ground.back().xy();
  const NavMetrics m = evaluate(ex.ground, executed, reference, goal, c.success_threshold);

  const fs::path dir(a.out_dir);
  OutputSet files;
  files.add(dir / "trajectory.txt", render([&](std::ostream& s) { write_trajectory(s, ex.trajectory); }));
  files.add(dir / "ground.txt", render([&](std::ostream& s) { write_ground_track(s, ex.ground); }));
  files.add(dir / "executed.txt", render([&](std::ostream& s) { write_ground_track(s, executed); }));
  files.add(dir / "metrics.txt", render([&](std::ostream& s) { write_metrics(s, m); }));
  files.commit();

  out << "frames " << assoc.observations.size() << ", unmatched detections " << assoc.dropped
      << ", pnp failures " << ex.pnp_failures << '\n';
  write_metrics(out, m);
  return ok;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  ConfigArgs config;
  std::string scenario, out_dir;
  std::optional<std::uint64_t> seed;
  bool clean = false;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  PipelineConfig c = a.config.load();
  const Scenario s = find_scenario(a.scenario, c.scene, c.frame_rate);
  if (a.clean) c.noise = NoiseSpec::none();
  if (a.seed) c.noise.seed = *a.seed;
  // The written config describes this scenario's robot, so extract can reuse it.
  c.robot_width = s.robot_width;
  c.robot_height = s.robot_height;
  const SimulationOutput sim = simulate(s, c.noise, c);

  const fs::path dir(a.out_dir);
  OutputSet files;
  files.add(dir / "detections.txt", render([&](std::ostream& o) { write_detections(o, sim.detections); }));
  files.add(dir / "poses.txt", render([&](std::ostream& o) { write_camera_poses(o, sim.poses); }));
  files.add(dir / "truth.txt", render([&](std::ostream& o) { write_ground_track(o, sim.truth); }));
  files.add(dir / "config.txt", render([&](std::ostream& o) {
              o << "# scenario " << s.name << ", executor " << to_string(s.executor)
                << "; camera and noise values are simulator calibration stand-ins\n";
              write_config(o, c);
            }));
  files.commit();
  const auto present = std::count_if(sim.detections.begin(), sim.detections.end(),
                                     [](const DetectionRecord& d) { return d.present; });
  out << s.name << ": " << sim.detections.size() << " frames, " << present << " detections, goal "
      << format_double(s.goal.x()) << ',' << format_double(s.goal.y()) << '\n';
  return ok;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  ConfigArgs config;
  std::string track, truth, executed, goal, out_file, executor = "differential_drive";
};

int do_eval(const EvalArgs& a, std::ostream& out) {
  const PipelineConfig c = a.config.load();
  const GroundTrack track = load_ground(a.track);
  const GroundTrack truth = load_ground(a.truth);
  if (track.empty()) fail(Errc::parse_error, a.track + ": empty track");
  if (truth.empty()) fail(Errc::parse_error, a.truth + ": empty truth track");
  const GroundTrack executed = a.executed.empty() ? execute(track, parse_executor(a.executor), c.executor)
                                                  : load_ground(a.executed);
  if (executed.empty()) fail(Errc::parse_error, a.executed + ": empty executed track");
  const Eigen::Vector2d goal = a.goal.empty() ? truth.back().xy() : parse_goal(a.goal);
  const NavMetrics m = evaluate(track, executed, truth, goal, c.success_threshold);
  if (a.out_file.empty()) {
    write_metrics(out, m);
  } else {
    OutputSet files;
    files.add(a.out_file, render([&](std::ostream& s) { write_metrics(s, m); }));
    files.commit();
  }
  return ok;
}

// ------------------------------------------------------------------ batch

struct BatchArgs {
  ConfigArgs config;
  std::vector<std::string> scenarios;
  int seeds = 10;
  std::uint64_t first_seed = 0;
  unsigned jobs = 0;
  bool clean = false;
  std::string csv;
};

struct Row {
  std::string task;
  std::size_t trials = 0, failed = 0, successes = 0;
  double path = 0, final_err = 0, rmse = 0, max = 0;
};

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Row summarize(std::string task, const std::vector<const TrialResult*>& trials) {
  Row r;
  r.task = std::move(task);
  r.trials = trials.size();
  std::vector<double> path, fin, rmse, mx;
  for (const auto* t : trials) {
    if (!t->metrics) {
      ++r.failed;
      continue;
    }
    r.successes += t->metrics->success;
    path.push_back(t->metrics->path_length);
    fin.push_back(t->metrics->final_goal_error);
    rmse.push_back(t->metrics->tracking_rmse);
    mx.push_back(t->metrics->tracking_max);
  }
  r.path = median(path);
  r.final_err = median(fin);
  r.rmse = median(rmse);
  r.max = median(mx);
  return r;
}

std::vector<TrialResult> run_trials(const std::vector<Scenario>& scenarios, const PipelineConfig& c,
                                    int seeds, std::uint64_t first_seed, unsigned jobs) {
  const std::size_t n = scenarios.size() * static_cast<std::size_t>(seeds);
  std::vector<TrialResult> results(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      const Scenario& s = scenarios[i / seeds];
      NoiseSpec noise = c.noise;
      noise.seed = first_seed + i % seeds;
      try {
        results[i] = run_pipeline(s, noise, c);
      } catch (const std::exception& e) {
        results[i].scenario = s.name;
        results[i].seed = noise.seed;
        results[i].error = e.what();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

int do_batch(const BatchArgs& a, std::ostream& out, std::ostream& err) {
  PipelineConfig c = a.config.load();
  if (a.clean) c.noise = NoiseSpec::none();
  if (a.seeds < 1) fail(Errc::invalid_argument, "need at least one seed");
  std::vector<Scenario> scenarios;
  if (a.scenarios.empty()) {
    scenarios = builtin_scenarios(c.scene, c.frame_rate);
  } else {
    for (const auto& name : a.scenarios) scenarios.push_back(find_scenario(name, c.scene, c.frame_rate));
  }

  const auto results = run_trials(scenarios, c, a.seeds, a.first_seed, a.jobs);

  std::vector<Row> rows;
  std::vector<const TrialResult*> all;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    std::vector<const TrialResult*> group;
    for (int k = 0; k < a.seeds; ++k) group.push_back(&results[si * a.seeds + k]);
    all.insert(all.end(), group.begin(), group.end());
    rows.push_back(summarize(scenarios[si].name, group));
  }
  if (scenarios.size() > 1) rows.push_back(summarize("all", all));

  for (const auto& r : results)
    if (!r.metrics) err << "trial " << r.scenario << " seed " << r.seed << " failed: " << r.error << '\n';

  out << std::left << std::setw(12) << "task" << std::right << std::setw(8) << "trials" << std::setw(8)
      << "failed" << std::setw(10) << "path_m" << std::setw(13) << "final_err_m" << std::setw(14)
      << "track_rmse_m" << std::setw(13) << "track_max_m" << std::setw(11) << "successes" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.task << std::right << std::setw(8) << r.trials << std::setw(8)
        << r.failed << std::fixed << std::setprecision(3) << std::setw(10) << r.path << std::setw(13)
        << r.final_err << std::setw(14) << r.rmse << std::setw(13) << r.max << std::setw(11)
        << (std::to_string(r.successes) + "/" + std::to_string(r.trials)) << '\n';
    out.unsetf(std::ios::floatfield);
  }
  out << "(medians over completed trials; noise pixel_sigma=" << format_double(c.noise.pixel_sigma)
      << " dropout=" << format_double(c.noise.dropout_prob) << " are simulator calibration values)\n";

  if (!a.csv.empty()) {
    OutputSet files;
    files.add(a.csv, render([&](std::ostream& s) {
                s << "task,trials,failed,path_m,final_err_m,track_rmse_m,track_max_m,successes\n";
                for (const auto& r : rows)
                  s << r.task << ',' << r.trials << ',' << r.failed << ',' << format_double(r.path) << ','
                    << format_double(r.final_err) << ',' << format_double(r.rmse) << ','
                    << format_double(r.max) << ',' << r.successes << '\n';
              }));
    files.commit();
  }
  return ok;
}

// --------------------------------------------------------------- plot-csv

struct PlotArgs {
  std::string track, truth, out_file;
};

int do_plot(const PlotArgs& a, std::ostream& out) {
  const GroundTrack est = load_ground(a.track);
  const GroundTrack truth = load_ground(a.truth);
  if (est.empty()) fail(Errc::parse_error, a.track + ": empty track");
  if (truth.empty()) fail(Errc::parse_error, a.truth + ": empty truth track");
  const auto tp = truth.points();
  std::ostringstream csv;
  csv << "t,est_x,est_y,truth_x,truth_y,dx,dy\n";
  for (const auto& p : est.points()) {
    // Nearest truth sample in time; ties go to the earlier one.
    auto it = std::lower_bound(tp.begin(), tp.end(), p.timestamp,
                               [](const GroundPoint& g, double t) { return g.timestamp < t; });
    if (it == tp.end() || (it != tp.begin() && p.timestamp - (it - 1)->timestamp <= it->timestamp - p.timestamp))
      --it;
    csv << format_double(p.timestamp) << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(it->x) << ',' << format_double(it->y) << ',' << format_double(p.x - it->x) << ','
        << format_double(p.y - it->y) << '\n';
  }
  if (a.out_file.empty()) {
    out << csv.str();
  } else {
    OutputSet files;
    files.add(a.out_file, csv.str());
    files.commit();
  }
  return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robot trajectory extraction from detection and camera-pose streams"};
  app.name("vidtraj");
  app.require_subcommand(1);
  app.footer(keys_footer());

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Detections + camera poses -> trajectory, ground track, metrics");
  ex.config.attach(extract);
  extract->add_option("--detections", ex.detections, "Detection file")->required();
  extract->add_option("--poses", ex.poses, "Camera pose file")->required();
  extract->add_option("--out", ex.out_dir, "Output directory")->required();
  extract->add_option("--truth", ex.truth, "Reference ground track for tracking error");
  extract->add_option("--goal", ex.goal, "Goal x,y (default: truth endpoint, else extracted endpoint)");
  extract->add_option("--executor", ex.executor, "differential_drive | quadruped_proxy | identity");
  extract->footer(keys_footer());

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Render a builtin scenario into detection and pose files");
  sim.config.attach(simulate_cmd);
  simulate_cmd->add_option("scenario", sim.scenario, "ugv_red | ugv_blue | quadruped")->required();
  simulate_cmd->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate_cmd->add_option("--seed", sim.seed, "Noise seed (overrides noise.seed)");
  simulate_cmd->add_flag("--clean", sim.clean, "Disable all noise");
  simulate_cmd->footer(keys_footer());

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Metrics of an extracted ground track against a truth track");
  ev.config.attach(eval);
  eval->add_option("--track", ev.track, "Extracted ground track")->required();
  eval->add_option("--truth", ev.truth, "Truth ground track")->required();
  eval->add_option("--executed", ev.executed, "Executed track (default: run the executor on --track)");
  eval->add_option("--goal", ev.goal, "Goal x,y (default: truth endpoint)");
  eval->add_option("--executor", ev.executor, "differential_drive | quadruped_proxy | identity");
  eval->add_option("--out", ev.out_file, "Metrics file (default: stdout)");
  eval->footer(keys_footer());

  BatchArgs ba;
  auto* batch = app.add_subcommand("batch", "Repeated simulated trials with a summary table");
  ba.config.attach(batch);
  batch->add_option("--scenarios", ba.scenarios, "Scenario names (default: all)")->delimiter(',');
  batch->add_option("--seeds", ba.seeds, "Seeds per scenario")->check(CLI::PositiveNumber);
  batch->add_option("--first-seed", ba.first_seed, "First seed");
  batch->add_option("--jobs", ba.jobs, "Worker threads (default: hardware concurrency)");
  batch->add_flag("--clean", ba.clean, "Disable all noise");
  batch->add_option("--csv", ba.csv, "Also write the summary as CSV");
  batch->footer(keys_footer());

  PlotArgs pl;
  auto* plot = app.add_subcommand("plot-csv", "Time-aligned CSV of an extracted track against truth");
  plot->add_option("--track", pl.track, "Extracted ground track")->required();
  plot->add_option("--truth", pl.truth, "Truth ground track")->required();
  plot->add_option("--out", pl.out_file, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : input_error;
  }

  try {
    if (extract->parsed()) return do_extract(ex, out);
    if (simulate_cmd->parsed()) return do_simulate(sim, out);
    if (eval->parsed()) return do_eval(ev, out);
    if (batch->parsed()) return do_batch(ba, out, err);
    if (plot->parsed()) return do_plot(pl, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return internal_error;
  }
  return internal_error;
}

}  // namespace vidtraj::cli
