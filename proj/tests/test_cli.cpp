#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(THERMALSPLAT_CLI) + " --threads 1 " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kSpec = R"([scene]
width = 20
height = 20
grid = 32
points = 40
supersample = 1

[emitter]
x = 0.1
radius = 0.5

[orbit]
views = 9
)";

}  // namespace

TEST_CASE("synth, train, render and eval end to end") {
  const fs::path dir = test::scratch("cli");
  const fs::path log = dir / "log.txt";
  {
    std::ofstream f(dir / "scene.spec");
    f << kSpec;
  }
  const std::string data = (dir / "data").string();
  REQUIRE(run("synth --spec " + (dir / "scene.spec").string() + " --out " + data + " --seed 2", log) == 0);
  CHECK(fs::exists(dir / "data" / "sparse" / "0" / "cameras.bin"));

  // Zero iterations: initialization checkpoint only.
  const fs::path run0 = dir / "run0";
  REQUIRE(run("train --data " + data + " --out " + run0.string() + " --iterations 0", log) == 0);
  CHECK(fs::exists(run0 / "checkpoint_0.ckpt"));
  CHECK(read_all(run0 / "metrics.log").find("# use_atf=true") != std::string::npos);

  // Baseline flags land in the resolved config header.
  const fs::path base = dir / "base";
  REQUIRE(run("train --data " + data + " --out " + base.string() +
                  " --iterations 8 --no-atf --no-tcm --no-dis --set sh_degree_interval=4 --seed 3",
              log) == 0);
  const std::string header = read_all(base / "metrics.log");
  CHECK(header.find("# use_atf=false") != std::string::npos);
  CHECK(header.find("# use_dis=false") != std::string::npos);
  CHECK(header.find("# seed=3") != std::string::npos);
  CHECK(header.find("# sh_degree_interval=4") != std::string::npos);

  // Rendered test views re-score to the logged metrics (16-bit PNGs keep the
  // quantization error far below the print precision used here).
  const fs::path renders = dir / "renders";
  REQUIRE(run("render --checkpoint " + (base / "checkpoint_8.ckpt").string() + " --data " + data + " --out " +
                  renders.string() + " --depth 16",
              log) == 0);
  CHECK(fs::exists(renders / "frame_0000.png"));
  CHECK(fs::exists(renders / "frame_0008.png"));
  REQUIRE(run("eval --data " + data + " --checkpoint " + (base / "checkpoint_8.ckpt").string() + " --out " +
                  (dir / "eval_ckpt.txt").string(),
              log) == 0);
  REQUIRE(run("eval --data " + data + " --renders " + renders.string() + " --out " + (dir / "eval_png.txt").string(),
              log) == 0);
  const std::string a = read_all(dir / "eval_ckpt.txt"), b = read_all(dir / "eval_png.txt");
  CHECK(a.find("mean views=2") != std::string::npos);
  auto mean_psnr = [](const std::string& s) { return std::stod(s.substr(s.find("mean views=2 psnr=") + 18)); };
  CHECK(std::abs(mean_psnr(a) - mean_psnr(b)) < 0.05);

  // Ground truth against itself.
  REQUIRE(run("eval --data " + data + " --renders " + (dir / "data" / "images").string(), log) == 0);
  CHECK(read_all(log).find("mean views=2 psnr=inf ssim=1") != std::string::npos);

  // Identity checkpoint renders like the baseline renderer.
  const fs::path r_full = dir / "r_full", r_base = dir / "r_base";
  const std::string ck0 = (run0 / "checkpoint_0.ckpt").string();
  REQUIRE(run("render --checkpoint " + ck0 + " --data " + data + " --split all --out " + r_full.string(), log) == 0);
  REQUIRE(run("render --checkpoint " + ck0 + " --data " + data + " --split all --no-tcm --out " + r_base.string(), log) == 0);
  for (const auto& e : fs::directory_iterator(r_full)) CHECK(read_all(e.path()) == read_all(r_base / e.path().filename()));

  // Camera path rendering.
  {
    std::ofstream f(dir / "path.txt");
    f << "novel 20 20 10 10 20 20 1 0 0 0 0 0 3 0.5\n";
  }
  REQUIRE(run("render --checkpoint " + ck0 + " --path " + (dir / "path.txt").string() + " --out " + (dir / "novel").string(), log) == 0);
  CHECK(fs::exists(dir / "novel" / "novel.png"));

  // Resume continues from the checkpoint.
  REQUIRE(run("train --data " + data + " --out " + (dir / "resumed").string() + " --resume " +
                  (base / "checkpoint_8.ckpt").string() + " --iterations 10",
              log) == 0);
  CHECK(fs::exists(dir / "resumed" / "checkpoint_10.ckpt"));
}

TEST_CASE("exit codes") {
  const fs::path dir = test::scratch("cli_codes");
  const fs::path log = dir / "log.txt";
  CHECK(run("", log) == 1);
  CHECK(run("train --data " + dir.string() + " --out " + dir.string() + " --set bogus_key=1", log) != 0);
  CHECK(run("render --checkpoint " + (dir / "missing.ckpt").string() + " --path x --out " + dir.string(), log) == 2);
  CHECK(read_all(log).find("checkpoint not found") != std::string::npos);
  {
    std::ofstream f(dir / "bad.spec");
    f << "[emitter]\nradius = 0.3\n";
  }
  CHECK(run("synth --spec " + (dir / "bad.spec").string() + " --out " + (dir / "o").string(), log) == 1);
  CHECK(read_all(log).find("missing section [orbit]") != std::string::npos);
  {
    std::ofstream f(dir / "bad.cfg");
    f << "no_such_key = 1\n";
  }
  const std::string data = std::string(THERMALSPLAT_DATA_DIR);
  CHECK(run("synth --spec " + data + "/desk_scene.spec --out " + (dir / "desk").string(), log) == 0);
  CHECK(run("train --data " + (dir / "desk").string() + " --out " + (dir / "t").string() + " --config " +
                (dir / "bad.cfg").string(),
            log) == 1);
  CHECK(read_all(log).find("no_such_key") != std::string::npos);
}
