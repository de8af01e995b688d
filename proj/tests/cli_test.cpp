#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fairrank/cli.hpp"
#include "fairrank/ingest.hpp"
#include "fixtures.hpp"

using namespace fairrank;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("fairrank-cli-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string write(const std::string& name, const std::string& text) const {
    fs::path p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fairrank");
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kWorkedQueries =
    R"({"qid": "q1", "query": "fair exposure", "documents": [)"
    R"({"doc_id": "d1", "relevance": 1, "authors": ["a1"]},)"
    R"({"doc_id": "d2", "relevance": 1, "authors": ["a2"]},)"
    R"({"doc_id": "d3", "relevance": 0, "authors": ["a2"]}]})" "\n";
const char* kWorkedGroups = "author,gid\na1,g1\na2,g2\n";

}  // namespace

TEST_CASE("usage errors exit 1") {
  TempDir dir;
  std::string queries = dir.write("q.jsonl", kWorkedQueries);
  std::string run = dir.write("r.jsonl", "");

  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kUsage);

  Result missing = invoke({"evaluate", "--runs", run, "--queries", queries});
  CHECK(missing.code == cli::kUsage);
  CHECK(missing.err.find("--groups") != std::string::npos);

  Result policy = invoke({"simulate", "--queries", queries, "--policy", "oracle",
                          "--impressions", "3"});
  CHECK(policy.code == cli::kUsage);

  CHECK(invoke({"evaluate", "--runs", dir.path("absent.jsonl"), "--queries", queries,
                "--groups", queries})
            .code == cli::kUsage);
}

TEST_CASE("help exits 0") {
  Result r = invoke({"--help"});
  CHECK(r.code == cli::kSuccess);
  CHECK(r.out.find("evaluate") != std::string::npos);
  CHECK(invoke({"simulate", "--help"}).code == cli::kSuccess);
}

TEST_CASE("invalid configuration exits 2") {
  TempDir dir;
  std::string queries = dir.write("q.jsonl", kWorkedQueries);
  std::string groups = dir.write("g.csv", kWorkedGroups);
  std::string run = dir.write("r.jsonl", "");
  Result r = invoke({"evaluate", "--runs", run, "--queries", queries, "--groups", groups,
                     "--gamma", "1.5"});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("gamma") != std::string::npos);
  CHECK(invoke({"target", "--queries", queries, "--stop-rel", "-0.1"}).code ==
        cli::kDataError);
}

TEST_CASE("malformed data exits 2 with location") {
  TempDir dir;
  std::string queries = dir.write("q.jsonl", kWorkedQueries);
  std::string groups = dir.write("g.csv", "author,gid\na1,g1\na1,g2\n");
  std::string run = dir.write("r.jsonl", R"({"q_num": "q1.0", "qid": "q1", "ranking": ["d1"]})" "\n");
  Result r = invoke({"evaluate", "--runs", run, "--queries", queries, "--groups", groups});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("g.csv:3") != std::string::npos);

  std::string good_groups = dir.write("g2.csv", kWorkedGroups);
  std::string dup = dir.write("dup.jsonl", R"({"q_num": "q1.0", "qid": "q1", "ranking": ["d1", "d1"]})" "\n");
  Result d = invoke({"evaluate", "--runs", dup, "--queries", queries, "--groups", good_groups});
  CHECK(d.code == cli::kDataError);
  CHECK(d.err.find("d1") != std::string::npos);
}

TEST_CASE("evaluate and decompose the worked scenario") {
  TempDir dir;
  std::string queries = dir.write("q.jsonl", kWorkedQueries);
  std::string groups = dir.write("g.csv", kWorkedGroups);
  std::string run = dir.write(
      "single.jsonl", R"({"q_num": "q1.0", "qid": "q1", "ranking": ["d1", "d2", "d3"]})" "\n");

  Result e = invoke({"evaluate", "--runs", run, "--queries", queries, "--groups", groups,
                     "--out", dir.path("out")});
  REQUIRE(e.code == cli::kSuccess);
  CHECK(e.out == "run\tEE\nsingle\t0.601\n");
  CHECK(slurp(dir.path("out/plot-data.tsv")) ==
        "run_id\tdisparity\trelevance\nsingle\t1.030\t0.678\n");
  CHECK(fs::exists(dir.path("out/leaderboard.jsonl")));
  CHECK(fs::exists(dir.path("out/single.queries.jsonl")));

  Result d = invoke({"decompose", "--runs", run, "--queries", queries, "--groups", groups});
  REQUIRE(d.code == cli::kSuccess);
  CHECK(d.out ==
        "run_id\tqid\tee\tdisparity\trelevance\n"
        "single\tq1\t0.601041\t1.029756\t0.678069\n"
        "single\tall\t0.601041\t1.029756\t0.678069\n");

  Result board = invoke({"leaderboard", "--metrics", dir.path("out/leaderboard.jsonl")});
  CHECK(board.code == cli::kSuccess);
  CHECK(board.out == "run\tEE\nsingle\t0.601\n");
}

TEST_CASE("target") {
  TempDir dir;
  std::string queries = dir.write(
      "q.jsonl", R"({"qid": "q", "query": "x", "documents": [)"
                 R"({"doc_id": "d1", "relevance": 1, "authors": ["a1"]},)"
                 R"({"doc_id": "d2", "relevance": 0, "authors": ["a2"]}]})" "\n");
  auto values = [](const std::string& text) {
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "qid\tauthor_id\ttarget");
    std::map<std::string, double> v;
    while (std::getline(lines, line)) {
      auto tab = line.rfind('\t');
      v[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
    }
    return v;
  };
  Result one = invoke({"target", "--queries", queries});
  REQUIRE(one.code == cli::kSuccess);
  auto unit = values(one.out);
  REQUIRE(unit.size() == 2);
  CHECK(unit["q\ta1"] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(unit["q\ta2"] == doctest::Approx(0.15).epsilon(1e-12));

  Result hundred = invoke({"target", "--queries", queries, "--impressions", "100"});
  REQUIRE(hundred.code == cli::kSuccess);
  auto scaled = values(hundred.out);
  CHECK(scaled["q\ta1"] == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(scaled["q\ta2"] == doctest::Approx(15.0).epsilon(1e-12));

  std::string empty = dir.write("empty.jsonl", "");
  Result none = invoke({"target", "--queries", empty});
  CHECK(none.code == cli::kSuccess);
  CHECK(none.out == "qid\tauthor_id\ttarget\n");
}

TEST_CASE("simulate") {
  TempDir dir;
  std::string queries = dir.write("q.jsonl", kWorkedQueries);

  Result det = invoke({"simulate", "--queries", queries, "--policy",
                       "deterministic-relevance", "--impressions", "3"});
  REQUIRE(det.code == cli::kSuccess);
  std::istringstream in(det.out);
  auto parsed = read_run_lines(in);
  REQUIRE(parsed.lines.size() == 3);
  for (const auto& line : parsed.lines) CHECK(line.ranking == parsed.lines[0].ranking);

  std::vector<std::string> args{"simulate", "--queries", queries, "--policy",
                                "uniform-random", "--impressions", "50", "--seed", "9"};
  Result a = invoke(args);
  Result b = invoke(args);
  REQUIRE(a.code == cli::kSuccess);
  CHECK(a.out == b.out);
  args.back() = "10";
  CHECK(invoke(args).out != a.out);

  CHECK(invoke({"simulate", "--queries", queries, "--policy", "ideal-sampler",
                "--impressions", "0"})
            .code != cli::kSuccess);
}

TEST_CASE("ideal sampler ranks above deterministic ranking") {
  TempDir dir;
  std::string queries = dir.write(
      "q.jsonl",
      R"({"qid": "q1", "query": "a", "documents": [)"
      R"({"doc_id": "d1", "relevance": 1, "authors": ["a1"]},)"
      R"({"doc_id": "d2", "relevance": 1, "authors": ["a2"]},)"
      R"({"doc_id": "d3", "relevance": 1, "authors": ["a3"]},)"
      R"({"doc_id": "d4", "relevance": 0, "authors": ["a1"]}]})" "\n"
      R"({"qid": "q2", "query": "b", "documents": [)"
      R"({"doc_id": "e1", "relevance": 1, "authors": ["a3"]},)"
      R"({"doc_id": "e2", "relevance": 1, "authors": ["a1"]},)"
      R"({"doc_id": "e3", "relevance": 0, "authors": ["a2"]}]})" "\n");
  std::string groups = dir.write("g.csv", "author,gid\na1,g1\na2,g2\na3,g3\n");
  for (std::string policy : {"ideal-sampler", "deterministic-relevance"}) {
    Result r = invoke({"simulate", "--queries", queries, "--policy", policy,
                       "--impressions", "400", "--seed", "3", "--out",
                       dir.path(policy + ".jsonl")});
    REQUIRE(r.code == cli::kSuccess);
  }
  Result e = invoke({"evaluate", "--runs", dir.path("deterministic-relevance.jsonl"),
                     dir.path("ideal-sampler.jsonl"), "--queries", queries, "--groups",
                     groups, "--jobs", "2"});
  REQUIRE(e.code == cli::kSuccess);
  CHECK(e.out.find("ideal-sampler") < e.out.find("deterministic-relevance"));

  Result dup = invoke({"evaluate", "--runs", dir.path("ideal-sampler.jsonl"),
                       dir.path("ideal-sampler.jsonl"), "--queries", queries,
                       "--groups", groups});
  CHECK(dup.code == cli::kDataError);
}

TEST_CASE("estimate-relevance") {
  TempDir dir;
  std::string clicks = dir.write("c.csv",
                                 "qid,doc_id,position,clicked,propensity\n"
                                 "q1,d1,1,1,0.5\nq1,d1,2,0,1.0\n"
                                 "q1,d2,1,0,1.0\nq1,d3,3,1,0.25\n");
  std::string queries = dir.write("q.jsonl", kWorkedQueries);
  Result r = invoke({"estimate-relevance", "--clicks", clicks, "--threshold", "0.5",
                     "--queries", queries, "--queries-out", dir.path("relabelled.jsonl"),
                     "--filter"});
  REQUIRE(r.code == cli::kSuccess);
  CHECK(r.out.find("q1\td2\t0\t1\t0") != std::string::npos);
  std::ifstream relabelled(dir.path("relabelled.jsonl"));
  auto parsed = parse_queries_file(relabelled);
  REQUIRE(parsed.requests.size() == 1);
  CHECK(parsed.requests[0].find("d1")->relevant);
  CHECK_FALSE(parsed.requests[0].find("d2")->relevant);
  CHECK(parsed.requests[0].find("d3")->relevant);

  CHECK(invoke({"estimate-relevance", "--clicks", clicks, "--threshold", "-1"}).code ==
        cli::kDataError);
}

TEST_CASE("installed binary reports exit codes") {
  TempDir dir;
  std::string queries = dir.write("q.jsonl", kWorkedQueries);
  std::string base = std::string("\"") + FAIRRANK_CLI_PATH + "\"";
  auto status = [](const std::string& cmd) {
    int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(base + " --help") == 0);
  CHECK(status(base + " target --queries \"" + queries + "\"") == 0);
  CHECK(status(base + " target --queries \"" + queries + "\" --gamma 2") == 2);
  CHECK(status(base + " target") == 1);
}
