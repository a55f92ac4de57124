#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "support/test_support.hpp"

extern char** environ;

namespace statqa {
namespace {

using nlohmann::json;
using testing::TempDir;

const std::string kBinary = STATQA_CLI;

std::string fixture_config() { return (testing::fixture_dir() / "config.json").string(); }

// Runs the CLI with stdout captured into `out` (when given); returns the exit status.
int run(const std::string& args, const std::filesystem::path& out = {}) {
  std::string cmd = kBinary + " --log-level off " + args;
  cmd += out.empty() ? " > /dev/null" : " > " + out.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> rows;
  std::istringstream in(testing::slurp(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  return rows;
}

int free_port() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  close(fd);
  return ntohs(addr.sin_port);
}

TEST(Cli, IndexIsByteIdentical) {
  TempDir dir;
  const std::string base = "-c " + fixture_config() + " index --out ";
  ASSERT_EQ(run(base + (dir / "a.json").string()), 0);
  ASSERT_EQ(run(base + (dir / "b.json").string()), 0);
  const auto a = testing::slurp(dir / "a.json");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, testing::slurp(dir / "b.json"));
}

TEST(Cli, TuneRetrieveEvalMatchesTheOracle) {
  TempDir dir;
  const auto expected = json::parse(testing::slurp(testing::fixture_dir() / "expected.json"));
  const std::string cfg = "-c " + fixture_config() + " --paths.index=" + (dir / "index.json").string() +
                          " --paths.params=" + (dir / "params.json").string();
  ASSERT_EQ(run(cfg + " index"), 0);
  ASSERT_EQ(run(cfg + " tune"), 0);
  const auto params = json::parse(testing::slurp(dir / "params.json"));
  EXPECT_DOUBLE_EQ(params["alpha"].get<double>(), expected["alpha"].get<double>());
  EXPECT_DOUBLE_EQ(params["theta"].get<double>(), expected["theta"].get<double>());
  EXPECT_EQ(params["tuned_on"], "questions.json");

  ASSERT_EQ(run(cfg + " retrieve --out " + (dir / "pred.jsonl").string()), 0);
  const auto rows = read_jsonl(dir / "pred.jsonl");
  ASSERT_EQ(rows.size(), expected["predictions"].size());
  for (const auto& row : rows) {
    const auto& want = expected["predictions"][row["question_id"].get<std::string>()];
    ASSERT_EQ(row["relevant_articles"].size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(row["relevant_articles"][i]["law_id"], want[i][0]);
      EXPECT_EQ(row["relevant_articles"][i]["article_id"], want[i][1]);
    }
  }

  ASSERT_EQ(run(cfg + " eval -p " + (dir / "pred.jsonl").string() + " --recall-at 1,2,3,5,10 --out " +
                (dir / "report.json").string() + " --csv " + (dir / "report.csv").string()),
            0);
  const auto report = json::parse(testing::slurp(dir / "report.json"));
  EXPECT_EQ(report["summary"]["f2_macro"], expected["f2_macro_rounded"]);
  EXPECT_EQ(report["summary"]["questions"], 16);
  for (const auto& [k, v] : expected["recall_at_k"].items()) {
    EXPECT_NEAR(report["summary"]["recall_at_k"][k].get<double>(), v.get<double>(), 5e-5) << k;
  }
  EXPECT_NE(testing::slurp(dir / "report.csv").find("f2_macro"), std::string::npos);
}

TEST(Cli, AlphaOneIsPureBm25) {
  TempDir dir;
  ASSERT_EQ(run("-c " + fixture_config() + " retrieve --alpha 1 --theta 0 --with-scores --out " +
                (dir / "r.jsonl").string()),
            0);
  for (const auto& row : read_jsonl(dir / "r.jsonl")) {
    for (const auto& c : row["candidates"]) EXPECT_DOUBLE_EQ(c["score"].get<double>(), c["w_bm25"].get<double>());
    // theta 0 keeps the whole pool
    EXPECT_EQ(row["relevant_articles"].size(), row["candidates"].size());
  }
}

TEST(Cli, QaWritesOneAnswerPerQuestion) {
  TempDir dir;
  ASSERT_EQ(run("-c " + fixture_config() + " qa --alpha 1 --theta 0.35 --out " + (dir / "a.jsonl").string()), 0);
  const auto rows = read_jsonl(dir / "a.jsonl");
  ASSERT_EQ(rows.size(), 16u);
  for (const auto& row : rows) EXPECT_TRUE(row.contains("answer"));
  EXPECT_EQ(run("-c " + fixture_config() + " eval -a " + (dir / "a.jsonl").string(), dir / "rep.json"), 0);
  EXPECT_TRUE(json::parse(testing::slurp(dir / "rep.json"))["summary"].contains("accuracy"));
}

TEST(Cli, StatsAndEnrich) {
  TempDir dir;
  ASSERT_EQ(run("-c " + fixture_config() + " stats corpus", dir / "stats.json"), 0);
  const auto stats = json::parse(testing::slurp(dir / "stats.json"));
  EXPECT_TRUE(stats.contains("buckets"));

  testing::spit(dir / "dump.jsonl",
                R"({"question":"Thanh niên là ai?","answer":"Theo Điều 1 Luật Thanh niên.","url":"u1"})"
                "\n"
                R"({"question":"Đất đai?","answer":"Theo Điều 9 Luật Đất đai.","url":"u2"})"
                "\n");
  ASSERT_EQ(run("-c " + fixture_config() + " enrich --dump " + (dir / "dump.jsonl").string() +
                " --mc-questions " + (testing::fixture_dir() / "questions.json").string() + " --out-dir " +
                (dir / "out").string()),
            0);
  EXPECT_EQ(read_jsonl(dir / "out" / "task1_pairs.jsonl").size(), 1u);
  const auto yesno = read_jsonl(dir / "out" / "yesno_from_mc.jsonl");
  EXPECT_FALSE(yesno.empty());
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "enrich_summary.json"));
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  testing::spit(dir / "bad.json", R"({"bm25":{"kone":1}})");
  EXPECT_EQ(run("-c " + (dir / "bad.json").string() + " stats corpus"), 2);
  EXPECT_EQ(run("-c " + fixture_config() + " --bm25.b=7 stats corpus"), 2);
  EXPECT_EQ(run("-c " + fixture_config() + " --no.such=1 stats corpus"), 2);
  EXPECT_NE(run("-c " + (dir / "missing.json").string() + " stats corpus"), 0);
  // no params file and no --alpha/--theta
  EXPECT_EQ(run("-c " + fixture_config() + " --paths.params=" + (dir / "none.json").string() + " retrieve --out " +
                (dir / "x.jsonl").string()),
            2);
  EXPECT_NE(run("bogus"), 0);
}

TEST(Cli, ServeMatchesRetrieve) {
  TempDir dir;
  ASSERT_EQ(run("-c " + fixture_config() + " retrieve --alpha 0.6 --theta 0.4 --with-scores --out " +
                (dir / "r.jsonl").string()),
            0);
  const auto rows = read_jsonl(dir / "r.jsonl");
  const auto questions = json::parse(testing::slurp(testing::fixture_dir() / "questions.json"));

  const int port = free_port();
  const std::string port_s = std::to_string(port);
  const std::string cfg = fixture_config();
  std::vector<std::string> argv_s{kBinary, "--log-level", "off", "-c", cfg, "serve", "--port", port_s,
                                  "--alpha", "0.6", "--theta", "0.4"};
  std::vector<char*> argv;
  for (auto& s : argv_s) argv.push_back(s.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  ASSERT_EQ(posix_spawn(&pid, kBinary.c_str(), nullptr, nullptr, argv.data(), environ), 0);
  struct Reaper {
    pid_t& pid;
    ~Reaper() {
      if (pid > 0) {
        kill(pid, SIGKILL);
        waitpid(pid, nullptr, 0);
      }
    }
  } reaper{pid};

  httplib::Client client("127.0.0.1", port);
  bool up = false;
  for (int i = 0; i < 100 && !up; ++i) {
    auto res = client.Get("/health");
    up = res && res->status == 200;
    if (!up) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ASSERT_TRUE(up);

  std::map<std::string, std::string> text_by_qid;
  for (const auto& q : questions.is_array() ? questions : questions["items"]) {
    text_by_qid[q["question_id"].get<std::string>()] = q["text"].get<std::string>();
  }
  for (const auto& row : rows) {
    const std::string qid = row["question_id"];
    httplib::Params params{{"q", text_by_qid.at(qid)}, {"k", "5"}, {"qid", qid}};
    auto res = client.Get("/search", params, httplib::Headers{});
    ASSERT_TRUE(res) << qid << ": " << httplib::to_string(res.error());
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body), row) << qid;
  }
  auto bad = client.Get("/search?k=3");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto bad_k = client.Get("/search?q=x&k=zero");
  ASSERT_TRUE(bad_k);
  EXPECT_EQ(bad_k->status, 400);

  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  pid = 0;
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

}  // namespace
}  // namespace statqa
