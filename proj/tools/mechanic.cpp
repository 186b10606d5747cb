// mechanic: headless entry points for learning, evaluating, playing,
// clustering and serving.
//
// Exit status: 0 on success, 1 on a domain error (bad input file, learning
// did not converge, ...), 2 on a usage error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mm/analysis.hpp"
#include "mm/error.hpp"
#include "mm/evaluation.hpp"
#include "mm/persistence.hpp"
#include "mm/runtime.hpp"
#include "mm/service.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct LearnArgs {
  std::string project, out, text;
  std::optional<int> theta, maxIter, vmax;
  bool noKinematics = false;
};

struct EvalArgs {
  std::string engine, reference, report;
  bool noKinematics = false;
};

struct PlayArgs {
  std::string engine, frame0, trace, out;
  int frameIndex = 0;
  bool noKinematics = false;
};

struct ClusterArgs {
  std::string engines, k = "auto", out;
  std::uint64_t seed = 0;
  int kMax = 12;
  int restarts = 1;
};

struct ServeArgs {
  std::string socket, fixtures;
  bool stdio = false;
  bool autoRelearn = false;
  double tickRate = mm::kDefaultTickRate;
};

struct ExportArgs {
  std::string engine, text;
};

std::optional<mm::EventLog> event_log() {
  const char* path = std::getenv("MM_LOG");
  if (path == nullptr || *path == '\0') return std::nullopt;
  return mm::EventLog(path);
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") std::cout << text;
  else mm::write_text_file(path, text);
}

int run_learn(const LearnArgs& a) {
  mm::Project project = mm::load_project(a.project);
  mm::ConfigOverrides cli;
  cli.theta = a.theta;
  cli.maxIterations = a.maxIter;
  cli.vmax = a.vmax;
  if (a.noKinematics) cli.kinematics = false;
  const mm::LearnerConfig config = cli.apply(project.config.apply({}));
  auto log = event_log();
  if (log) log->append(mm::EventKind::kLearnStarted, {{"project", a.project}});
  const auto frames = mm::prepare_demonstration(project.frames, config.vmax);
  const mm::LearnResult result = mm::learn(frames, config);
  if (log)
    log->append(mm::EventKind::kLearnFinished,
                {{"converged", result.converged}, {"totalError", result.totalError}});
  mm::save_engine(result.engine, a.out);
  if (!a.text.empty()) write_output(a.text, mm::export_engine_text(result.engine));
  std::cout << "rules " << result.engine.size() << ", total error " << result.totalError
            << (result.converged ? ", converged\n" : ", not converged\n");
  if (!result.converged) {
    std::cerr << "error: learning did not converge on " << a.project
              << "; wrote the closest engine found to " << a.out << "\n";
    return 1;
  }
  return 0;
}

int run_eval(const EvalArgs& a) {
  const mm::Engine engine = mm::load_engine(a.engine);
  const mm::Project reference = mm::load_project(a.reference);
  mm::LearnerConfig config = reference.config.apply({});
  if (a.noKinematics) config.kinematics = false;
  const auto frames = mm::prepare_demonstration(reference.frames, config.vmax);
  const mm::EvalReport report = mm::frame_error(engine, frames, config);
  if (!a.report.empty()) write_output(a.report, mm::report_to_json(report).dump(2) + "\n");
  std::cout << "meanError " << report.meanError << ", baseline " << report.baselineMeanError
            << "\n";
  return 0;
}

std::vector<mm::ButtonArray> load_trace(const std::string& path) {
  const json j = mm::parse_json_text(mm::read_text_file(path), path);
  if (!j.is_array()) throw mm::SchemaError(path + ": expected an array of button maps");
  std::vector<mm::ButtonArray> trace;
  for (std::size_t i = 0; i < j.size(); ++i)
    trace.push_back(mm::buttons_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  return trace;
}

int run_play(const PlayArgs& a) {
  const mm::Engine engine = mm::load_engine(a.engine);
  const mm::Project project = mm::load_project(a.frame0);
  if (a.frameIndex < 0 || static_cast<std::size_t>(a.frameIndex) >= project.frames.size())
    throw mm::RangeError(a.frame0 + ": no frame " + std::to_string(a.frameIndex));
  mm::LearnerConfig config = project.config.apply({});
  if (a.noKinematics) config.kinematics = false;
  const auto prefix = mm::prepare_demonstration(
      std::span<const mm::Frame>(project.frames).first(a.frameIndex + 1), config.vmax);
  const auto trace = load_trace(a.trace);
  auto log = event_log();
  if (log) log->append(mm::EventKind::kPlayStarted, {{"frameIndex", a.frameIndex}});
  const auto frames = mm::run_trace(engine, prefix.back(), trace, config);
  if (log) log->append(mm::EventKind::kPlayEnded, {{"ticks", frames.size()}});
  json out = json::array();
  for (const auto& f : frames) out.push_back(mm::frame_to_json(f));
  write_output(a.out, out.dump(2) + "\n");
  return 0;
}

int run_cluster(const ClusterArgs& a) {
  if (!fs::is_directory(a.engines)) throw mm::IoError(a.engines + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.engines)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(".engine.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<mm::ClusterRow> rows;
  std::vector<mm::Point> points;
  for (const auto& file : files) {
    const mm::Engine engine = mm::load_engine(file);
    std::string stem = file.filename().string();
    stem.resize(stem.size() - std::string_view(".engine.json").size());
    for (const auto& rule : engine.rules()) {
      mm::ClusterRow row;
      row.ruleId = stem + ":" + std::to_string(rule.id);
      row.vector = mm::encode_rule(rule);
      points.emplace_back(row.vector.begin(), row.vector.end());
      rows.push_back(std::move(row));
    }
  }
  if (points.empty()) throw mm::InsufficientDataError(a.engines + ": no rules in any *.engine.json");

  mm::GmmOptions options;
  options.restarts = a.restarts;
  mm::GmmModel model;
  if (a.k == "auto") {
    if (points.size() < 2) {
      model = mm::fit_gmm(points, 1, a.seed, options);
    } else {
      auto elbow = mm::elbow_select(points, a.kMax, a.seed, options);
      model = elbow.models[elbow.k - 1];
      std::cout << "elbow curve:";
      for (double v : elbow.curve) std::cout << ' ' << v;
      std::cout << "\n";
    }
  } else {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(a.k, &used);
      if (used != a.k.size()) throw std::invalid_argument(a.k);
    } catch (const std::exception&) {
      throw mm::InvalidArgumentError("--k must be 'auto' or a positive integer, got '" + a.k + "'");
    }
    model = mm::fit_gmm(points, k, a.seed, options);
  }
  const auto assignments = mm::assign_clusters(model, points);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].assignment = assignments[i];

  std::ostringstream csv;
  mm::write_cluster_csv(csv, rows);
  write_output(a.out, csv.str());
  std::cout << "k " << model.k << ", " << rows.size() << " rules from " << files.size()
            << " engines\n";
  return 0;
}

int run_serve(const ServeArgs& a) {
  mm::ServiceOptions options;
  options.autoRelearn = a.autoRelearn;
  options.session.tickRate = a.tickRate;
  options.session.fixtureDir = a.fixtures;
  if (const char* path = std::getenv("MM_LOG"); path != nullptr && *path != '\0')
    options.session.eventLog = path;
  if (a.stdio) mm::serve_stdio(options);
  else mm::serve_unix_socket(a.socket, options);
  return 0;
}

int run_export(const ExportArgs& a) {
  write_output(a.text, mm::export_engine_text(mm::load_engine(a.engine)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn game rules from demonstrated frames, then evaluate, play and cluster them."};
  app.require_subcommand(1);

  LearnArgs learnArgs;
  auto* learn = app.add_subcommand("learn", "Learn an engine from a project's frames");
  learn->add_option("--project", learnArgs.project, "Project file (.mmproj)")->required();
  learn->add_option("--out", learnArgs.out, "Engine JSON to write")->required();
  learn->add_option("--text", learnArgs.text, "Also write the rule listing here ('-' for stdout)");
  learn->add_option("--theta", learnArgs.theta, "Allowed fact mismatches per transition")
      ->check(CLI::NonNegativeNumber);
  learn->add_option("--max-iter", learnArgs.maxIter, "Search iterations per failing transition")
      ->check(CLI::PositiveNumber);
  learn->add_option("--vmax", learnArgs.vmax, "Largest per-frame move read as velocity")
      ->check(CLI::PositiveNumber);
  learn->add_flag("--no-kinematics", learnArgs.noKinematics, "Do not apply velocities to positions");

  EvalArgs evalArgs;
  auto* eval = app.add_subcommand("eval", "Frame error of an engine on reference frames");
  eval->add_option("--engine", evalArgs.engine, "Engine JSON")->required();
  eval->add_option("--reference", evalArgs.reference, "Reference project (.mmproj)")->required();
  eval->add_option("--report", evalArgs.report, "Report JSON to write ('-' for stdout)");
  eval->add_flag("--no-kinematics", evalArgs.noKinematics, "Do not apply velocities to positions");

  PlayArgs playArgs;
  auto* play = app.add_subcommand("play", "Run an engine against a recorded input trace");
  play->add_option("--engine", playArgs.engine, "Engine JSON")->required();
  play->add_option("--frame0", playArgs.frame0, "Project holding the starting frame")->required();
  play->add_option("--frame-index", playArgs.frameIndex, "Which project frame to start from")
      ->check(CLI::NonNegativeNumber);
  play->add_option("--trace", playArgs.trace, "JSON array of button maps, one per tick")
      ->required();
  play->add_option("--out", playArgs.out, "Frames JSON to write ('-' for stdout)")->required();
  play->add_flag("--no-kinematics", playArgs.noKinematics, "Do not apply velocities to positions");

  ClusterArgs clusterArgs;
  auto* cluster = app.add_subcommand("cluster", "Group learned rules with a Gaussian mixture");
  cluster->add_option("--engines", clusterArgs.engines, "Directory of *.engine.json files")
      ->required();
  cluster->add_option("--k", clusterArgs.k, "Number of clusters, or 'auto' for the elbow method")
      ->capture_default_str();
  cluster->add_option("--k-max", clusterArgs.kMax, "Largest k tried by --k auto")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  cluster->add_option("--seed", clusterArgs.seed, "Random seed")->capture_default_str();
  cluster->add_option("--restarts", clusterArgs.restarts, "EM restarts per fit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cluster->add_option("--out", clusterArgs.out, "CSV to write ('-' for stdout)")->required();

  ServeArgs serveArgs;
  auto* serve = app.add_subcommand("serve", "Serve editing sessions over NDJSON");
  auto* socketOpt = serve->add_option("--socket", serveArgs.socket, "Unix socket path");
  auto* stdioOpt = serve->add_flag("--stdio", serveArgs.stdio, "Use standard input and output");
  socketOpt->excludes(stdioOpt);
  stdioOpt->excludes(socketOpt);
  serve->add_flag("--auto-relearn", serveArgs.autoRelearn, "Relearn in the background after edits");
  serve->add_option("--tick-rate", serveArgs.tickRate, "Play Mode ticks per second")
      ->check(CLI::Range(0.1, 1000.0))
      ->capture_default_str();
  serve->add_option("--fixtures", serveArgs.fixtures, "Directory eval.run resolves names in");

  ExportArgs exportArgs;
  auto* exp = app.add_subcommand("export", "Write an engine as a rule listing");
  exp->add_option("--engine", exportArgs.engine, "Engine JSON")->required();
  exp->add_option("--text", exportArgs.text, "Listing to write ('-' for stdout)")->required();

  app.footer("Environment: MM_LOG=<path> appends session events to a JSON-lines log.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (serve->parsed() && serveArgs.socket.empty() && !serveArgs.stdio) {
    std::cerr << "serve: one of --socket or --stdio is required\n";
    return 2;
  }

  try {
    if (learn->parsed()) return run_learn(learnArgs);
    if (eval->parsed()) return run_eval(evalArgs);
    if (play->parsed()) return run_play(playArgs);
    if (cluster->parsed()) return run_cluster(clusterArgs);
    if (serve->parsed()) return run_serve(serveArgs);
    if (exp->parsed()) return run_export(exportArgs);
  } catch (const mm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
