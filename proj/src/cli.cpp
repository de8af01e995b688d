#include "fairrank/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "fairrank/exposure.hpp"
#include "fairrank/ingest.hpp"
#include "fairrank/metrics.hpp"
#include "fairrank/policies.hpp"

namespace fairrank::cli {

namespace {

namespace fs = std::filesystem;

// Failure in user-supplied data; maps to kDataError.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  EvalConfig config;

  void add_to(CLI::App& app, bool with_strict = true) {
    app.add_option("--gamma", config.gamma,
                   "Continuation probability of the browsing model")
        ->capture_default_str();
    app.add_option("--stop-rel", config.stop_prob_relevant,
                   "Stop probability after a relevant document (toolkit "
                   "default, not a published value)")
        ->capture_default_str();
    app.add_option("--stop-nonrel", config.stop_prob_nonrelevant,
                   "Stop probability after a non-relevant document (toolkit "
                   "default, not a published value)")
        ->capture_default_str();
    if (with_strict) {
      app.add_flag("--strict", config.strict_candidates,
                   "Reject rankings with documents outside the candidate set "
                   "and runs that miss queries");
    }
  }
};

struct MetadataFlags {
  std::string papers;
  std::string authors;
  std::string authorship;

  void add_to(CLI::App& app) {
    auto* p = app.add_option("--paper-metadata", papers,
                             "paper_metadata.csv")
                  ->check(CLI::ExistingFile);
    auto* a = app.add_option("--author-metadata", authors,
                             "author_metadata.csv")
                  ->check(CLI::ExistingFile);
    auto* f = app.add_option("--authors-for-papers", authorship,
                             "authors_for_papers.csv")
                  ->check(CLI::ExistingFile);
    p->needs(a)->needs(f);
    a->needs(p)->needs(f);
    f->needs(p)->needs(a);
  }

  std::optional<Catalog> load(std::ostream& err) const {
    if (papers.empty()) return std::nullopt;
    Catalog catalog = load_metadata(papers, authors, authorship);
    for (const auto& w : catalog.warnings) err << "warning: " << w << '\n';
    return catalog;
  }
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path));
  return in;
}

std::vector<Request> load_queries(const std::string& path,
                                  const MetadataFlags& metadata,
                                  std::ostream& err) {
  std::optional<Catalog> catalog = metadata.load(err);
  std::ifstream in = open_input(path);
  ParsedQueries parsed =
      parse_queries_file(in, catalog ? &*catalog : nullptr, path);
  for (const auto& w : parsed.warnings) err << "warning: " << w << '\n';
  return std::move(parsed.requests);
}

GroupAssignment load_groups(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_group_file(in, path);
}

// Writes through `fn` to `path`, or to `out` when path is empty.
void emit(const std::string& path, std::ostream& out,
          const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError(fmt::format("cannot write {}", path));
  fn(file);
  if (!file) throw DataError(fmt::format("error writing {}", path));
}

std::vector<RunMetrics> evaluate_runs(const std::vector<std::string>& paths,
                                      const std::vector<Request>& requests,
                                      const GroupAssignment& groups,
                                      const EvalConfig& config,
                                      std::size_t jobs, std::ostream& err) {
  std::vector<RunMetrics> runs;
  std::set<std::string> ids;
  for (const auto& path : paths) {
    RunFile run = load_run_file(path);
    if (!ids.insert(run.run_id).second) {
      throw DataError(fmt::format("duplicate run id {} ({})", run.run_id, path));
    }
    for (const auto& w : run.warnings) err << "warning: " << w << '\n';
    try {
      runs.push_back(evaluate_run(run.run_id, requests, run.sequences, groups,
                                  config, jobs));
    } catch (const EvaluationError& e) {
      throw DataError(fmt::format("run {}: {}", run.run_id, e.what()));
    }
    for (const auto& w : runs.back().warnings) {
      err << "warning: run " << run.run_id << ": " << w << '\n';
    }
  }
  std::sort(runs.begin(), runs.end(),
            [](const auto& a, const auto& b) { return a.run_id < b.run_id; });
  return runs;
}

struct EvaluateArgs {
  std::vector<std::string> runs;
  std::string queries;
  std::string groups;
  std::string out_dir;
  std::string format = "table";
  std::size_t jobs = 1;
  ConfigFlags config;
  MetadataFlags metadata;
};

void add_evaluation_inputs(CLI::App& cmd, EvaluateArgs& args) {
  cmd.add_option("--runs", args.runs, "Run files (one JSON object per line)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd.add_option("--queries", args.queries, "Queries file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd.add_option("--groups", args.groups, "Group definition CSV (author,gid)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd.add_option("--jobs", args.jobs, "Worker threads per run")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  args.config.add_to(cmd);
  args.metadata.add_to(cmd);
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out,
                 std::ostream& err) {
  args.config.config.validate();
  std::vector<Request> requests = load_queries(args.queries, args.metadata, err);
  GroupAssignment groups = load_groups(args.groups);
  std::vector<RunMetrics> runs = evaluate_runs(
      args.runs, requests, groups, args.config.config, args.jobs, err);

  ReportFormat format = *parse_report_format(args.format);
  write_report(runs, format, out);

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    fs::path dir(args.out_dir);
    emit((dir / "leaderboard.tsv").string(), out,
         [&](std::ostream& o) { write_report(runs, ReportFormat::kTable, o); });
    emit((dir / "leaderboard.jsonl").string(), out, [&](std::ostream& o) {
      write_report(runs, ReportFormat::kMachineReadable, o);
    });
    emit((dir / "plot-data.tsv").string(), out, [&](std::ostream& o) {
      write_report(runs, ReportFormat::kPlotData, o);
    });
    for (const auto& run : runs) {
      emit((dir / (run.run_id + ".queries.jsonl")).string(), out,
           [&](std::ostream& o) { write_query_details(run, o); });
    }
  }
  return kSuccess;
}

int cmd_decompose(const EvaluateArgs& args, std::ostream& out,
                  std::ostream& err) {
  args.config.config.validate();
  std::vector<Request> requests = load_queries(args.queries, args.metadata, err);
  GroupAssignment groups = load_groups(args.groups);
  std::vector<RunMetrics> runs = evaluate_runs(
      args.runs, requests, groups, args.config.config, args.jobs, err);
  emit(args.out_dir, out, [&](std::ostream& o) {
    o << "run_id\tqid\tee\tdisparity\trelevance\n";
    for (const auto& run : runs) {
      for (const auto& q : run.per_query) {
        fmt::print(o, "{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\n", run.run_id, q.qid,
                   q.ee, q.disparity, q.relevance);
      }
      fmt::print(o, "{}\tall\t{:.6f}\t{:.6f}\t{:.6f}\n", run.run_id,
                 run.mean_ee, run.mean_disparity, run.mean_relevance);
    }
  });
  return kSuccess;
}

struct TargetArgs {
  std::string queries;
  std::size_t impressions = 1;
  std::string out;
  ConfigFlags config;
  MetadataFlags metadata;
};

int cmd_target(const TargetArgs& args, std::ostream& out, std::ostream& err) {
  args.config.config.validate();
  std::vector<Request> requests = load_queries(args.queries, args.metadata, err);
  std::sort(requests.begin(), requests.end(),
            [](const auto& a, const auto& b) { return a.qid() < b.qid(); });
  emit(args.out, out, [&](std::ostream& o) {
    o << "qid\tauthor_id\ttarget\n";
    for (const auto& request : requests) {
      if (request.candidates().empty()) {
        err << "warning: query " << request.qid()
            << " has no candidates; skipped\n";
        continue;
      }
      ExposureVector target =
          target_exposure(request, args.impressions, args.config.config);
      for (const auto& [author, e] : target) {
        fmt::print(o, "{}\t{}\t{}\n", request.qid(), author, e);
      }
    }
  });
  return kSuccess;
}

struct SimulateArgs {
  std::string queries;
  std::string policy;
  std::size_t impressions = 1;
  std::uint64_t seed = 0;
  std::string out;
  ConfigFlags config;
  MetadataFlags metadata;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out,
                 std::ostream& err) {
  args.config.config.validate();
  std::vector<Request> requests = load_queries(args.queries, args.metadata, err);
  PolicySpec spec{*parse_policy_kind(args.policy), args.seed};
  std::map<QueryId, RankingSequence> sequences;
  try {
    sequences = run_protocol(requests, args.impressions, spec,
                             args.config.config);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  std::vector<RunLine> lines = to_run_lines(sequences);
  emit(args.out, out, [&](std::ostream& o) { write_run_lines(lines, o); });
  return kSuccess;
}

struct LeaderboardArgs {
  std::vector<std::string> metrics;
  std::string format = "table";
  std::string out;
};

int cmd_leaderboard(const LeaderboardArgs& args, std::ostream& out) {
  std::vector<LeaderboardRow> rows;
  for (const auto& path : args.metrics) {
    std::ifstream in = open_input(path);
    for (auto& row : read_leaderboard_rows(in, path)) {
      rows.push_back(std::move(row));
    }
  }
  ReportFormat format = *parse_report_format(args.format);
  emit(args.out, out, [&](std::ostream& o) {
    write_report(std::span<const LeaderboardRow>(rows), format, o);
  });
  return kSuccess;
}

struct EstimateArgs {
  std::string clicks;
  double threshold = 0.0;
  std::string out;
  std::string queries;
  std::string queries_out;
  bool filter = false;
  MetadataFlags metadata;
};

int cmd_estimate(const EstimateArgs& args, std::ostream& out,
                 std::ostream& err) {
  std::ifstream in = open_input(args.clicks);
  std::vector<ClickRecord> clicks = parse_click_log(in, args.clicks);
  std::map<RelevanceKey, RelevanceEstimate> estimates;
  try {
    estimates = estimate_relevance(clicks, args.threshold);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  emit(args.out, out, [&](std::ostream& o) {
    o << "qid\tdoc_id\tscore\timpressions\trelevance\n";
    for (const auto& [key, e] : estimates) {
      fmt::print(o, "{}\t{}\t{}\t{}\t{}\n", key.first, key.second, e.score,
                 e.impressions, e.relevant ? 1 : 0);
    }
  });
  if (!args.queries.empty()) {
    std::vector<Request> requests =
        apply_relevance(load_queries(args.queries, args.metadata, err),
                        estimates);
    if (args.filter) {
      std::size_t before = requests.size();
      requests = filter_queries(requests);
      err << fmt::format("kept {} of {} queries\n", requests.size(), before);
    }
    emit(args.queries_out, out,
         [&](std::ostream& o) { write_queries_file(requests, o); });
  }
  return kSuccess;
}

std::vector<std::string> policy_names() {
  std::vector<std::string> names;
  for (PolicyKind kind : all_policy_kinds()) {
    names.emplace_back(policy_name(kind));
  }
  return names;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Expected-exposure fairness evaluation for ranking runs",
               args.empty() ? "fairrank" : args.front()};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fairrank 0.1.0");

  const std::vector<std::string> formats{"table", "machine-readable",
                                         "plot-data"};

  EvaluateArgs evaluate_args;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score run files and print the leaderboard (ascending EE)");
  add_evaluation_inputs(*evaluate, evaluate_args);
  evaluate->add_option("--out", evaluate_args.out_dir,
                       "Directory for leaderboard and per-query files");
  evaluate->add_option("--format", evaluate_args.format,
                       "Leaderboard format on stdout")
      ->capture_default_str()
      ->check(CLI::IsMember(formats));

  EvaluateArgs decompose_args;
  auto* decompose = app.add_subcommand(
      "decompose", "Per-query EE with its disparity/relevance components");
  add_evaluation_inputs(*decompose, decompose_args);
  decompose->add_option("--out", decompose_args.out_dir,
                        "Output TSV (default stdout)");

  TargetArgs target_args;
  auto* target = app.add_subcommand(
      "target", "Per-author target exposure under the ideal policy");
  target->add_option("--queries", target_args.queries, "Queries file")
      ->required()
      ->check(CLI::ExistingFile);
  target->add_option("--impressions", target_args.impressions,
                     "Impressions per query")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  target->add_option("--out", target_args.out, "Output TSV (default stdout)");
  target_args.config.add_to(*target, false);
  target_args.metadata.add_to(*target);

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand(
      "simulate", "Generate a run file from a baseline ranking policy");
  simulate->add_option("--queries", simulate_args.queries, "Queries file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--policy", simulate_args.policy, "Ranking policy")
      ->required()
      ->check(CLI::IsMember(policy_names()));
  simulate->add_option("--impressions", simulate_args.impressions,
                       "Rankings per query")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", simulate_args.seed, "Random seed")
      ->capture_default_str();
  simulate->add_option("--out", simulate_args.out,
                       "Output run file (default stdout)");
  simulate_args.config.add_to(*simulate, false);
  simulate_args.metadata.add_to(*simulate);

  LeaderboardArgs leaderboard_args;
  auto* board = app.add_subcommand(
      "leaderboard", "Merge machine-readable run summaries into one table");
  board->add_option("--metrics", leaderboard_args.metrics,
                    "leaderboard.jsonl files written by evaluate")
      ->required()
      ->check(CLI::ExistingFile);
  board->add_option("--format", leaderboard_args.format, "Output format")
      ->capture_default_str()
      ->check(CLI::IsMember(formats));
  board->add_option("--out", leaderboard_args.out, "Output (default stdout)");

  EstimateArgs estimate_args;
  auto* estimate = app.add_subcommand(
      "estimate-relevance",
      "Binary relevance from propensity-weighted click rates");
  estimate->add_option("--clicks", estimate_args.clicks,
                       "Click log CSV (qid,doc_id,position,clicked,propensity)")
      ->required()
      ->check(CLI::ExistingFile);
  estimate->add_option("--threshold", estimate_args.threshold,
                       "Minimum weighted click rate for relevance")
      ->required();
  estimate->add_option("--out", estimate_args.out,
                       "Estimates TSV (default stdout)");
  auto* relabel = estimate->add_option(
      "--queries", estimate_args.queries,
      "Queries file to relabel with the estimates");
  relabel->check(CLI::ExistingFile);
  estimate->add_option("--queries-out", estimate_args.queries_out,
                       "Relabelled queries file")
      ->needs(relabel);
  estimate->add_flag("--filter", estimate_args.filter,
                     "Keep queries with >=2 relevant documents and <=4 words")
      ->needs(relabel);
  estimate_args.metadata.add_to(*estimate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*evaluate) return cmd_evaluate(evaluate_args, out, err);
    if (*decompose) return cmd_decompose(decompose_args, out, err);
    if (*target) return cmd_target(target_args, out, err);
    if (*simulate) return cmd_simulate(simulate_args, out, err);
    if (*board) return cmd_leaderboard(leaderboard_args, out);
    if (*estimate) return cmd_estimate(estimate_args, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const EvaluationError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace fairrank::cli
