#include <doctest.h>
#include <fmt/format.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

Result run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = fmt::format("cd '{}' && '{}' {} 2>&1", cwd.string(), TW_CLI_PATH, args);
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / fmt::format("tw_test_cli_{}", ::getpid());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

const fs::path kFixtures = fs::path(TW_SOURCE_DIR) / "fixtures";

}  // namespace

TEST_CASE("kappa on identical label files prints 1") {
  Scratch s;
  const auto labels = (kFixtures / "labels.csv").string();
  const auto r = run(fmt::format("kappa --labels '{}' --labels_b '{}' --out out", labels, labels), s.dir);
  CHECK(r.status == 0);
  CHECK(r.output == "1\n");
  CHECK(fs::exists(s.dir / "out" / "kappa.csv"));
  CHECK(fs::exists(s.dir / "out" / "manifests" / "kappa.json"));
  CHECK_FALSE(fs::exists(s.dir / "out" / ".targetwatch.lock"));
}

TEST_CASE("classify without a trained model exits 2 and names the file") {
  Scratch s;
  const auto r = run(fmt::format("classify --posts '{}' --out out --seed 1", (kFixtures / "posts.jsonl").string()),
                     s.dir);
  CHECK(r.status == 2);
  CHECK(r.output.find("stack.json") != std::string::npos);
}

TEST_CASE("configuration errors exit 1") {
  Scratch s;
  CHECK(run("ingest --config missing.conf", s.dir).status == 1);
  CHECK(run("ingest --min_mentions abc", s.dir).status == 1);
  CHECK(run("ingest --no-such-flag 3", s.dir).status == 1);
  CHECK(run("", s.dir).status == 1);
  {
    std::ofstream f(s.dir / "bad.conf");
    f << "keyness_p = 2\n";
  }
  CHECK(run("ingest --config bad.conf", s.dir).status == 1);
}

TEST_CASE("missing input exits 2") {
  Scratch s;
  const auto r = run(fmt::format("ingest --posts /nonexistent/posts.jsonl --roster '{}' --out out",
                                 (kFixtures / "roster.csv").string()),
                     s.dir);
  CHECK(r.status == 2);
  CHECK(r.output.find("/nonexistent/posts.jsonl") != std::string::npos);
}

TEST_CASE("a held lock makes the run fail with exit 1") {
  Scratch s;
  fs::create_directories(s.dir / "out");
  std::ofstream(s.dir / "out" / ".targetwatch.lock") << "1\n";
  const auto labels = (kFixtures / "labels.csv").string();
  CHECK(run(fmt::format("kappa --labels '{}' --labels_b '{}' --out out", labels, labels), s.dir).status == 1);
}

TEST_CASE("version flag") {
  Scratch s;
  const auto r = run("--version", s.dir);
  CHECK(r.status == 0);
  CHECK(r.output == "0.4.0\n");
}
