#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = SKYSEG_CLI_PATH;

int run(const std::string& args) {
  int rc = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("skyseg_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

const char* kMicroCfg =
    "task = dense20\n"
    "sl_counts = 1,1,1,1,1,1,1,1,1,1,1\n"
    "growth = 2\n"
    "stem_channels = 4\n"
    "seed = 5\n"
    "loss = ce+soft_iou\n"
    "lr = 0.001\n"
    "epochs = 1\n"
    "max_steps = 2\n"
    "checkpoint_every = 0\n"
    "tile = 32\n";

}  // namespace

TEST_CASE("gen-data writes a deterministic dataset") {
  auto a = scratch("gen_a"), b = scratch("gen_b");
  REQUIRE(run("gen-data --seed 3 --count 2 --size 32 --out " + a.string()) == 0);
  REQUIRE(run("gen-data --seed 3 --count 2 --size 32 --out " + b.string()) == 0);
  for (auto rel : {"manifest.txt", "images/0000.ppm", "images/0001.ppm", "masks/0000.pgm",
                   "masks/0001.pgm"}) {
    REQUIRE(fs::exists(a / rel));
    CHECK(slurp(a / rel) == slurp(b / rel));
  }
  auto c = scratch("gen_c");
  REQUIRE(run("gen-data --seed 4 --count 2 --size 32 --out " + c.string()) == 0);
  CHECK(slurp(a / "images/0000.ppm") != slurp(c / "images/0000.ppm"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("train, eval, and infer round trip on a micro run") {
  auto dir = scratch("roundtrip");
  auto data = dir / "data";
  REQUIRE(run("gen-data --seed 1 --count 2 --size 32 --out " + data.string()) == 0);

  write_text(dir / "run.cfg", kMicroCfg);
  auto out = dir / "out";
  REQUIRE(run("train --config " + (dir / "run.cfg").string() + " --data " + data.string() +
              " --out " + out.string()) == 0);
  auto weights = out / "weights.ssnw";
  CHECK(fs::exists(weights));
  CHECK(fs::exists(out / "train_log.csv"));

  auto eval_out = dir / "eval";
  REQUIRE(run("eval --config " + (dir / "run.cfg").string() + " --data " + data.string() +
              " --out " + eval_out.string() + " --weights " + weights.string()) == 0);
  CHECK(fs::exists(eval_out / "metrics_semantic.csv"));
  CHECK(fs::exists(eval_out / "metrics_edge_binary.csv"));

  auto mask = dir / "pred.pgm";
  REQUIRE(run("infer --config " + (dir / "run.cfg").string() + " --weights " +
              weights.string() + " " + (data / "images/0000.ppm").string() + " --out " +
              mask.string()) == 0);
  auto bytes = slurp(mask);
  CHECK(bytes.rfind("P5\n", 0) == 0);
  CHECK(bytes.find("32 32") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("eval --oracle scores ground truth perfectly") {
  auto dir = scratch("oracle");
  auto data = dir / "data";
  REQUIRE(run("gen-data --seed 2 --count 2 --size 32 --out " + data.string()) == 0);
  write_text(dir / "run.cfg", kMicroCfg);

  std::string cmd = kCli + " eval --oracle --config " + (dir / "run.cfg").string() +
                    " --data " + data.string() + " --out " + dir.string() + " > " +
                    (dir / "eval.txt").string() + " 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  auto text = slurp(dir / "eval.txt");
  CHECK(text.find("semantic: mIoU 1,") != std::string::npos);

  auto csv = slurp(dir / "metrics_semantic.csv");
  CHECK(csv.rfind("class,tp,fp,fn,iou,precision,recall\n", 0) == 0);
  CHECK(csv.find("low-veg") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("exit codes distinguish config, data, and verify failures") {
  auto dir = scratch("exitcodes");
  write_text(dir / "bad.cfg", "task = dense20\nno_such_key = 1\n");
  CHECK(run("train --config " + (dir / "bad.cfg").string()) == 1);

  write_text(dir / "run.cfg", kMicroCfg);
  CHECK(run("train --config " + (dir / "run.cfg").string() + " --data " +
            (dir / "missing").string()) == 2);

  // eval with neither weights nor --oracle is a config error
  CHECK(run("eval --config " + (dir / "run.cfg").string() + " --data " + dir.string()) == 1);

  CHECK(run("verify --suite no-such-suite") == 1);
  fs::remove_all(dir);
}

TEST_CASE("verify suites pass") {
  CHECK(run("verify --suite loss-oracle") == 0);
  CHECK(run("verify --suite metric-oracle") == 0);
  CHECK(run("verify --suite tile-roundtrip") == 0);
}

TEST_CASE("SKYSEG_SEED overrides the configured seed") {
  auto dir = scratch("envseed");
  auto data = dir / "data";
  REQUIRE(run("gen-data --seed 1 --count 1 --size 32 --out " + data.string()) == 0);
  write_text(dir / "run.cfg", std::string(kMicroCfg) + "max_steps = 1\n");

  auto train_with = [&](const std::string& env, const fs::path& out) {
    std::string cmd = env + kCli + " train --config " + (dir / "run.cfg").string() +
                      " --data " + data.string() + " --out " + out.string() +
                      " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  REQUIRE(train_with("", dir / "a") == 0);
  REQUIRE(train_with("SKYSEG_SEED=99 ", dir / "b") == 0);
  REQUIRE(train_with("SKYSEG_SEED=99 ", dir / "c") == 0);
  CHECK(slurp(dir / "a/weights.ssnw") != slurp(dir / "b/weights.ssnw"));
  CHECK(slurp(dir / "b/weights.ssnw") == slurp(dir / "c/weights.ssnw"));
  fs::remove_all(dir);
}
