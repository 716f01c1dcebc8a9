// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cstdio>
#include <regex>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "cider/io.hpp"
#include "cider/losses.hpp"
#include "cider/pipeline.hpp"
#include "cider/synthetic.hpp"
#include "helpers.hpp"

using namespace cider;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// stdout only; stderr goes to a file next to the outputs.
Run cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(CIDER_CLI_PATH) + " " + args + " 2>" + (dir / "stderr.txt").string();
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string err_text(const fs::path& dir) { return io::read_file(dir / "stderr.txt"); }

struct Fixture {
  fs::path dir;
  fs::path sharp, blurred, delta, gauss;

  explicit Fixture(const std::string& name) : dir(testing::scratch(name)) {
    sharp = dir / "sharp.png";
    blurred = dir / "blurred.png";
    delta = dir / "delta.txt";
    gauss = dir / "gauss.txt";
    const Image chart = synthetic::test_chart(32);
    io::write_image(sharp, chart);
    io::write_kernel(delta, Kernel::delta());
    io::write_kernel(gauss, Kernel::gaussian(5, 1.0));
  }
  std::string p(const fs::path& f) const { return f.string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  Fixture f("cli-usage");
  CHECK(cli("", f.dir).code == 1);
  CHECK(cli("frobnicate", f.dir).code == 1);
  CHECK(cli("metrics --a " + f.p(f.sharp), f.dir).code == 1);
  CHECK(cli("--help", f.dir).code == 0);
}

TEST_CASE("metrics prints a single parseable line") {
  Fixture f("cli-metrics");
  const Run same = cli("metrics --a " + f.p(f.sharp) + " --b " + f.p(f.sharp), f.dir);
  REQUIRE(same.code == 0);
  CHECK(same.out == "psnr=100.000000 ssim=1.000000\n");

  Image other = io::read_image(f.sharp);
  for (real& v : other.data()) v = static_cast<real>(std::min(1.0, v + 0.1));
  io::write_image(f.dir / "other.pfm", other);
  const Run r = cli("metrics --a " + f.p(f.sharp) + " --b " + f.p(f.dir / "other.pfm"), f.dir);
  REQUIRE(r.code == 0);
  std::smatch m;
  REQUIRE(std::regex_match(r.out, m, std::regex(R"(psnr=([0-9.]+) ssim=([0-9.]+)\n)")));
  CHECK(std::stod(m[1]) == doctest::Approx(psnr(io::read_image(f.sharp), other)).epsilon(1e-5));
  CHECK(std::stod(m[2]) == doctest::Approx(ssim(io::read_image(f.sharp), other)).epsilon(1e-5));
}

TEST_CASE("rl with a delta kernel reproduces the input") {
  Fixture f("cli-rl");
  const fs::path out = f.dir / "out.png";
  const Run r = cli("rl --input " + f.p(f.sharp) + " --kernel " + f.p(f.delta) + " --output " + f.p(out) +
                        " --iters 1",
                    f.dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("iterations=1") != std::string::npos);
  CHECK(testing::max_abs_diff(io::read_image(f.sharp), io::read_image(out)) <= 1.0 / 255 + 1e-6);
}

TEST_CASE("simulate without noise matches the library") {
  Fixture f("cli-sim");
  const Run r = cli("simulate --input " + f.p(f.sharp) + " --kernel " + f.p(f.gauss) + " --output " +
                        f.p(f.dir / "b.pfm") + " --noise none",
                    f.dir);
  REQUIRE(r.code == 0);
  DegradationSpec spec;
  spec.kernel = Kernel::gaussian(5, 1.0);
  const Image expect = simulate_blur(io::read_image(f.sharp), spec, 42);
  CHECK(testing::max_abs_diff(expect, io::read_image(f.dir / "b.pfm")) <= 1e-6);

  CHECK(cli("simulate --input " + f.p(f.sharp) + " --kernel " + f.p(f.gauss) + " --output " +
                f.p(f.dir / "c.pfm") + " --noise speckle",
            f.dir)
            .code == 1);
}

TEST_CASE("background writes both images") {
  Fixture f("cli-bg");
  const Run r = cli("background --input " + f.p(f.sharp) + " --output " + f.p(f.dir / "fg.pfm") +
                        " --save-background " + f.p(f.dir / "bg.pfm"),
                    f.dir);
  REQUIRE(r.code == 0);
  const Image y = io::read_image(f.sharp);
  const Image fg = io::read_image(f.dir / "fg.pfm");
  const Image bg = io::read_image(f.dir / "bg.pfm");
  Image sum = fg;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += bg[i];
  // Subtraction clamps at zero, so fg + bg >= y.
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(sum[i] >= y[i] - 1e-5);
}

TEST_CASE("deconvolve writes the image and the sidecar, deterministically") {
  Fixture f("cli-dec");
  nlohmann::json cfg = {{"T", 4}, {"rl_iterations", 3}, {"seed", 9}};
  io::write_file(f.dir / "cfg.json", cfg.dump());
  auto run = [&](const std::string& stem) {
    return cli("deconvolve --input " + f.p(f.sharp) + " --kernel " + f.p(f.gauss) + " --config " +
                   f.p(f.dir / "cfg.json") + " --output " + f.p(f.dir / (stem + ".pfm")),
               f.dir);
  };
  const Run a = run("a");
  REQUIRE(a.code == 0);
  REQUIRE(run("b").code == 0);
  CHECK(io::read_file(f.dir / "a.pfm") == io::read_file(f.dir / "b.pfm"));

  const auto side = nlohmann::json::parse(io::read_file(f.dir / "a.pfm.json"));
  CHECK(side["loss_trace"].size() == 4);
  CHECK(side["config"]["seed"] == 9);
  CHECK(side["param_count"] == 387857);
  CHECK(a.out.find("config_hash=" + side["config_hash"].get<std::string>()) != std::string::npos);

  // --iters and --seed override the file.
  const Run c = cli("deconvolve --input " + f.p(f.sharp) + " --kernel " + f.p(f.gauss) + " --config " +
                        f.p(f.dir / "cfg.json") + " --iters 2 --seed 3 --output " + f.p(f.dir / "c.pfm") +
                        " --report " + f.p(f.dir / "c.json"),
                    f.dir);
  REQUIRE(c.code == 0);
  const auto side_c = nlohmann::json::parse(io::read_file(f.dir / "c.json"));
  CHECK(side_c["loss_trace"].size() == 2);
  CHECK(side_c["config"]["seed"] == 3);
}

TEST_CASE("input and config problems exit with 1 and a message") {
  Fixture f("cli-errors");
  const std::string base = "deconvolve --kernel " + f.p(f.gauss) + " --output " + f.p(f.dir / "o.pfm");
  CHECK(cli(base + " --input " + f.p(f.dir / "missing.png"), f.dir).code == 1);
  CHECK(err_text(f.dir).find("missing.png") != std::string::npos);

  io::write_file(f.dir / "bad.json", R"({"T": 5, "learning_rate": 1})");
  CHECK(cli(base + " --input " + f.p(f.sharp) + " --config " + f.p(f.dir / "bad.json"), f.dir).code == 1);
  CHECK(err_text(f.dir).find("learning_rate") != std::string::npos);

  CHECK(cli(base + " --input " + f.p(f.sharp) + " --iters 0", f.dir).code == 1);
  CHECK(err_text(f.dir).find("T must be") != std::string::npos);
}

TEST_CASE("config prints the merged configuration") {
  Fixture f("cli-config");
  io::write_file(f.dir / "cfg.json", R"({"T": 77})");
  const Run r = cli("config --config " + f.p(f.dir / "cfg.json") + " --seed 5", f.dir);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["T"] == 77);
  CHECK(j["seed"] == 5);
  CHECK(j["rl_iterations"] == 30);
}
