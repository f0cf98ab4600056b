#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nftproj/series.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Spawns the installed binary through the shell, capturing both streams.
RunResult run_cli(const testutil::TempDir& dir, const std::string& args) {
  fs::path out_file = dir.file("stdout.txt");
  fs::path err_file = dir.file("stderr.txt");
  std::string cmd = std::string("\"") + NFTPROJ_CLI_PATH + "\" " + args + " >\"" +
                    out_file.string() + "\" 2>\"" + err_file.string() + "\"";
  int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::slurp(out_file);
  r.err = testutil::slurp(err_file);
  return r;
}

std::map<std::string, std::string> slurp_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files[fs::relative(entry.path(), root).string()] = testutil::slurp(entry.path());
  }
  return files;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("help exits 0 and names the subcommands") {
  testutil::TempDir dir;
  auto r = run_cli(dir, "--help");
  CHECK(r.code == 0);
  CHECK(r.out.find("synth") != std::string::npos);
  CHECK(r.out.find("evaluate") != std::string::npos);
  CHECK(r.out.find("generate") != std::string::npos);
}

TEST_CASE("missing required flag is a usage error") {
  testutil::TempDir dir;
  auto r = run_cli(dir, "synth --seed 7");
  CHECK(r.code == 1);
  CHECK(r.err.find("--out") != std::string::npos);
}

TEST_CASE("missing checkpoint is a data error naming the path") {
  testutil::TempDir dir;
  auto r = run_cli(dir, "evaluate --checkpoint " + q(dir.file("nope.bin")) +
                            " --train-series a.csv --test-series b.csv --out " +
                            q(dir.file("r.csv")) + " --seed 1");
  CHECK(r.code == 2);
  CHECK(r.err.find("missing checkpoint") != std::string::npos);
  CHECK(r.err.find("nope.bin") != std::string::npos);
}

TEST_CASE("synth output is reproducible per seed and seed-sensitive") {
  testutil::TempDir dir;
  CHECK(run_cli(dir, "synth --seed 7 --out " + q(dir.file("s1"))).code == 0);
  CHECK(run_cli(dir, "synth --seed 7 --out " + q(dir.file("s2"))).code == 0);
  CHECK(run_cli(dir, "synth --seed 8 --out " + q(dir.file("s3"))).code == 0);

  auto t1 = slurp_tree(dir.file("s1"));
  auto t2 = slurp_tree(dir.file("s2"));
  auto t3 = slurp_tree(dir.file("s3"));
  CHECK(t1.size() == 21);  // manifest + 10 x (events, series)
  CHECK(t1 == t2);
  REQUIRE(t3.count("manifest.json") == 1);
  CHECK(t1.at("manifest.json") != t3.at("manifest.json"));

  // Config file supplies the seed when the flag is absent.
  testutil::spit(dir.file("cfg.json"), "{\"synth_seed\": 7}\n");
  CHECK(run_cli(dir, "synth --config " + q(dir.file("cfg.json")) + " --out " +
                         q(dir.file("s4")))
            .code == 0);
  CHECK(slurp_tree(dir.file("s4")) == t1);
}

TEST_CASE("pipeline: series rebuild, context fit/embed/distance, train, generate") {
  testutil::TempDir dir;
  fs::path s = dir.file("suite");
  REQUIRE(run_cli(dir, "synth --seed 7 --out " + q(s)).code == 0);

  // Rebuilding alpha's series from its own events reproduces the emitted
  // truth file byte for byte (the full 0:79 token universe keeps tokens
  // that never sold).
  auto rebuild = run_cli(dir, "series --in " + q(s / "alpha.events.csv") + " --out " +
                                  q(dir.file("alpha_rebuilt.csv")) +
                                  " --inception-ts 1609459200 --tokens 0:79");
  CHECK(rebuild.code == 0);
  CHECK(testutil::slurp(dir.file("alpha_rebuilt.csv")) ==
        testutil::slurp(s / "alpha.series.csv"));

  std::string train_series;
  for (const char* id : {"alpha", "beta", "gamma", "delta", "epsilon"}) {
    train_series += " " + q(s / (std::string(id) + ".series.csv"));
  }
  fs::path ctx_ckpt = dir.file("ctx.bin");
  auto fit = run_cli(dir, "context fit --series" + train_series + " --out " + q(ctx_ckpt) +
                              " --contexts-csv " + q(dir.file("ctx.csv")));
  CHECK(fit.code == 0);
  std::string ctx_csv = testutil::slurp(dir.file("ctx.csv"));
  CHECK(ctx_csv.rfind("collection_id,c1,c2,c3,c4,c5,c6\n", 0) == 0);
  CHECK(std::count(ctx_csv.begin(), ctx_csv.end(), '\n') == 6);

  auto embed = run_cli(dir, "context embed --checkpoint " + q(ctx_ckpt) + " --series " +
                                q(s / "zeta.series.csv"));
  CHECK(embed.code == 0);
  CHECK(embed.out.rfind("collection_id,c1,c2,c3,c4,c5,c6\nzeta,", 0) == 0);

  // A training collection sits on its own context; the out-of-distribution
  // corpus crosses the default threshold and is called out on stderr.
  auto near = run_cli(dir, "context distance --checkpoint " + q(ctx_ckpt) + " --series " +
                               q(s / "alpha.series.csv"));
  CHECK(near.code == 0);
  CHECK(near.out.find("\nalpha,") != std::string::npos);
  CHECK(near.out.find(",0\n") != std::string::npos);
  CHECK(near.err.empty());

  auto far = run_cli(dir, "context distance --checkpoint " + q(ctx_ckpt) + " --series " +
                              q(s / "kappa.series.csv"));
  CHECK(far.code == 0);
  CHECK(far.out.find(",1\n") != std::string::npos);
  CHECK(far.err.find("warning: kappa") != std::string::npos);
  CHECK(far.err.find("nearest training collection") != std::string::npos);

  fs::path model_ckpt = dir.file("model.bin");
  auto trained = run_cli(dir, "train --checkpoint " + q(ctx_ckpt) + " --series" + train_series +
                                  " --out " + q(model_ckpt) +
                                  " --loss-csv " + q(dir.file("loss.csv")) +
                                  " --epochs 1 --window 10 --stride 40 --hidden 2" +
                                  " --batch-size 256 --seed 3");
  CHECK(trained.code == 0);
  CHECK(testutil::slurp(dir.file("loss.csv")).rfind("epoch,loss\n1,", 0) == 0);

  auto gen = run_cli(dir, "generate --checkpoint " + q(model_ckpt) + " --series " +
                              q(s / "zeta.series.csv") + " --out-raw " +
                              q(dir.file("raw.csv")) + " --out-stepped " +
                              q(dir.file("stepped.csv")));
  CHECK(gen.code == 0);
  CHECK(testutil::slurp(dir.file("raw.csv")).rfind("token_id,day,value,count\n", 0) == 0);

  auto stepped = nftproj::read_series_csv(dir.file("stepped.csv"), "zeta", 1609459200);
  CHECK(stepped.tokens.size() == 52);
  for (const auto& tok : stepped.tokens) CHECK(tok.points.size() == nftproj::kYearDays);
  CHECK_NOTHROW(nftproj::validate_series(stepped, true));
}
