#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "support.hpp"
#include "thermalsplat/adam.hpp"
#include "thermalsplat/config.hpp"
#include "thermalsplat/error.hpp"

using namespace thermalsplat;

TEST_CASE("defaults") {
  const TrainConfig c;
  CHECK(c.total_iterations == 30000);
  CHECK(c.lambda_dis == 0.2);
  CHECK(c.lambda_dssim == 0.2);
  CHECK(c.iter_t == 5000);
  CHECK(c.atf_depth == 8);
  CHECK(c.atf_width == 256);
  CHECK(c.atf_lr_start == 8e-4);
  CHECK(c.atf_lr_end == 1.6e-6);
  CHECK(c.checkpoint_iterations == std::vector<int>{7000, 30000});
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("key=value overrides and errors") {
  TrainConfig c;
  c.apply("total_iterations=123");
  c.apply(" use_atf = false ");
  c.apply("checkpoint_iterations=10, 20,30");
  c.set("seed", "18446744073709551615");
  CHECK(c.total_iterations == 123);
  CHECK_FALSE(c.use_atf);
  CHECK(c.checkpoint_iterations == std::vector<int>{10, 20, 30});
  CHECK(c.seed == std::numeric_limits<std::uint64_t>::max());
  try {
    c.apply("no_such_key=1");
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
  }
  CHECK_THROWS_AS(c.apply("sh_lr=fast"), UsageError);
  CHECK_THROWS_AS(c.apply("total_iterations=1.5"), UsageError);
  CHECK_THROWS_AS(c.apply("use_dis"), UsageError);
}

TEST_CASE("config file reports the failing line") {
  const auto dir = test::scratch("config_file");
  {
    std::ofstream f(dir / "a.cfg");
    f << "# comment\n\nsh_lr = 0.01  # trailing\nbogus=3\n";
  }
  TrainConfig c;
  try {
    c.apply_file(dir / "a.cfg");
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("a.cfg:4") != std::string::npos);
  }
  CHECK(c.sh_lr == 0.01);
}

TEST_CASE("text round trip is exact") {
  TrainConfig c;
  c.sh_lr = 0.1 + 0.2;
  c.background = 1.0 / 3.0;
  c.seed = 987654321987ULL;
  c.use_tcm = false;
  c.checkpoint_iterations = {1, 2};
  CHECK(TrainConfig::from_text(c.to_text()) == c);
}

TEST_CASE("validation") {
  TrainConfig c;
  c.lambda_dis = 0.5;
  c.lambda_dssim = 0.5;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = TrainConfig{};
  c.sh_degree_max = 4;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = TrainConfig{};
  c.total_iterations = -1;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("exponential learning-rate schedule") {
  CHECK(exponential_lr(1e-3, 1e-5, 0, 100) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(exponential_lr(1e-3, 1e-5, 100, 100) == doctest::Approx(1e-5).epsilon(1e-14));
  CHECK(exponential_lr(1e-3, 1e-5, 50, 100) == doctest::Approx(1e-4).epsilon(1e-14));
  CHECK(exponential_lr(1e-3, 1e-5, 500, 100) == doctest::Approx(1e-5).epsilon(1e-14));
}

TEST_CASE("Adam step follows the bias-corrected update") {
  AdamGroup g(1e-8);
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> grad{0.5, -1.0};
  CHECK(adam_step(p, grad, g, 0.1));
  // First step: m_hat = g, v_hat = g^2, so each parameter moves by lr * sign(g).
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(2.1).epsilon(1e-7));
  CHECK(g.step == 1);
  CHECK(g.m.size() == 2);
}

TEST_CASE("Adam skips non-finite gradients") {
  AdamGroup g;
  std::vector<double> p{1.0};
  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN()};
  CHECK_FALSE(adam_step(p, bad, g, 0.1));
  CHECK(p[0] == 1.0);
  CHECK(g.skipped == 1);
  CHECK(g.step == 0);
}

TEST_CASE("Adam epsilon per group") {
  CHECK(AdamGroup{}.eps == 1e-15);
  CHECK(AdamGroup(kAdamEpsNetwork).eps == 1e-8);
}
