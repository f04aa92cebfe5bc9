#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "evfgn_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + EVFGN_CLI + "\" -q " + args + " > " + (kRoot / "out.txt").string() +
                          " 2> " + (kRoot / "err.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string path(const std::string& name) { return (kRoot / name).string(); }

const std::string kSmallRun =
    " --set synthetic_vars=4 --set synthetic_length=320 --set steps=8 --set horizon=2 --set embed_dim=4"
    " --set order=2 --set ffn_hidden1=8 --set ffn_hidden2=8 --set epochs=3 --set batch_size=8 --set learning_rate=1e-3";

struct Workspace {
  Workspace() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
  ~Workspace() { fs::remove_all(kRoot); }
};

}  // namespace

TEST_CASE("synth output is byte-identical across runs with the same seed") {
  Workspace ws;
  REQUIRE(run("synth --kind var1 --vars 3 --length 200 --seed 5 --out " + path("a.csv")) == 0);
  REQUIRE(run("synth --kind var1 --vars 3 --length 200 --seed 5 --out " + path("b.csv")) == 0);
  CHECK(slurp(path("a.csv")) == slurp(path("b.csv")));
  CHECK(fs::exists(path("a.coupling.csv")));
  REQUIRE(run("synth --kind var1 --vars 3 --length 200 --seed 6 --out " + path("c.csv")) == 0);
  CHECK(slurp(path("a.csv")) != slurp(path("c.csv")));
  CHECK(run("synth --kind sawtooth --out " + path("d.csv")) == 1);
}

TEST_CASE("user errors exit with 1") {
  Workspace ws;
  CHECK(run("train --run " + path("r") + " --set no_such_key=3") == 1);
  CHECK(fs::exists(kRoot / "err.txt"));
  CHECK(slurp(kRoot / "err.txt").find("no_such_key") != std::string::npos);
  CHECK(run("train --run " + path("r") + " --set embed_dim=zero") == 1);
  CHECK(run("evaluate --run " + path("missing")) == 1);
  CHECK(run("train --run " + path("r") + " --set data=" + path("absent.csv")) == 1);
  CHECK(run("no-such-command") == 1);
}

TEST_CASE("verify passes cleanly and fails under an injected fault") {
  Workspace ws;
  CHECK(run("verify --seed 3") == 0);
  CHECK(run("verify --seed 3 --inject-fault") == 2);
}

TEST_CASE("train, evaluate, predict and export-adjacency round-trip") {
  Workspace ws;
  const std::string run_dir = path("run");
  REQUIRE(run("train --run " + run_dir + kSmallRun) == 0);
  for (const char* f : {"config.resolved", "checkpoint.bin", "history.csv", "metrics.csv"})
    CHECK(fs::exists(fs::path(run_dir) / f));
  const std::string trained = slurp(fs::path(run_dir) / "metrics.csv");

  REQUIRE(run("evaluate --run " + run_dir) == 0);
  CHECK(slurp(fs::path(run_dir) / "metrics.csv") == trained);

  REQUIRE(run("predict --run " + run_dir + " --out " + path("forecast.csv")) == 0);
  CHECK(fs::file_size(path("forecast.csv")) > 0);

  REQUIRE(run("export-adjacency --run " + run_dir + " --mode spatial_avg --indices 0,2 --out " + path("adj")) == 0);
  CHECK(fs::exists(path("adj.csv")));
  CHECK(fs::exists(path("adj.manifest")));
  CHECK(run("export-adjacency --run " + run_dir + " --mode spatial_avg --indices 9 --out " + path("adj")) == 1);

  // A second run with the same config reproduces the checkpoint bytes.
  REQUIRE(run("train --run " + path("again") + kSmallRun) == 0);
  CHECK(slurp(fs::path(run_dir) / "checkpoint.bin") == slurp(kRoot / "again" / "checkpoint.bin"));
}
