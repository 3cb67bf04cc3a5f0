#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spmcsr/evaldata.hpp"
#include "spmcsr/io.hpp"
#include "spmcsr/manifest.hpp"
#include "support.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

using namespace spmcsr;
using namespace spmcsr::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::map<std::string, std::string> kv;

  double num(const std::string &key) const {
    const auto it = kv.find(key);
    REQUIRE_MESSAGE(it != kv.end(), "missing key " << key << " in output:\n" << out);
    return std::stod(it->second);
  }
};

Run spmcsr_cli(const std::string &args) {
  const std::string cmd = std::string(SPMCSR_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE *p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), p)) r.out += buf;
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::istringstream in(r.out);
  for (std::string line; std::getline(in, line);) {
    std::istringstream words(line);
    for (std::string w; words >> w;) {
      const auto eq = w.find('=');
      if (eq != std::string::npos) r.kv[w.substr(0, eq)] = w.substr(eq + 1);
    }
  }
  return r;
}

std::vector<char> bytes_of(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 8-bit texture so the PNG copy equals the in-memory truth.
Image quantized_texture(Eigen::Index w, Eigen::Index h, std::uint64_t seed) {
  Image t = random_texture(w, h, seed);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = double(quantize8(t.data()[i])) / 255.0;
  return t;
}

struct ExactFixture {
  fs::path root, hr_dir, seq;
  ExactFixture() {
    root = scratch_dir("cli_exact");
    hr_dir = root / "hr";
    seq = root / "seq";
    fs::create_directories(hr_dir);
    write_image(hr_dir / "hr.png", quantized_texture(64, 64, 3));
    const auto r = spmcsr_cli("degrade " + hr_dir.string() + " " + seq.string() + " --alpha 2 --method exact");
    REQUIRE(r.status == 0);
  }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(spmcsr_cli("").status == 2);
  CHECK(spmcsr_cli("frobnicate").status == 2);
  CHECK(spmcsr_cli("eval only_one.png").status == 2);
  CHECK(spmcsr_cli("eval /nonexistent/a.png /nonexistent/b.png").status == 2);
  CHECK(spmcsr_cli("--help").status == 0);
}

TEST_CASE("exact degradation writes frames, both flow orientations and a manifest") {
  ExactFixture fx;
  for (int i = 0; i < 4; ++i) CHECK(fs::exists(fx.seq / frame_file_name(std::size_t(i))));
  for (int i = 1; i < 4; ++i) {
    CHECK(fs::exists(fx.seq / flow_to_ref_name(i)));
    CHECK(fs::exists(fx.seq / flow_from_ref_name(i)));
  }
  const Flow f3 = read_flo(fx.seq / flow_to_ref_name(3));
  CHECK((f3.u == 0.5).all());
  CHECK((f3.v == 0.5).all());
  const Flow b3 = read_flo(fx.seq / flow_from_ref_name(3));
  CHECK((b3.u == -0.5).all());
  const auto m = RunManifest::read(fx.seq / "manifest.txt");
  CHECK(m.command == "degrade");
  CHECK(*m.find("alpha") == "2");
  CHECK(m.outputs.size() == 6 + 4);
}

TEST_CASE("reconstruction from true flows") {
  ExactFixture fx;
  const std::string truth = (fx.hr_dir / "hr.png").string();
  const std::string base = "reconstruct " + fx.seq.string() + " --flows " + fx.seq.string() + " --truth " + truth;

  const auto spmc = spmcsr_cli(base + " --out " + (fx.root / "spmc.png").string());
  REQUIRE(spmc.status == 0);
  CHECK(spmc.num("psnr") >= 99.0);
  CHECK(spmc.num("coverage") == 1.0);
  CHECK(spmc.num("frame.0.coverage") == 0.25);
  CHECK(bitwise_equal(read_gray(fx.root / "spmc.png"), read_gray(truth)));

  const auto bw = spmcsr_cli(base + " --align bw --out " + (fx.root / "bw.png").string());
  REQUIRE(bw.status == 0);
  CHECK(bw.num("psnr") < spmc.num("psnr"));

  const auto one = spmcsr_cli(base + " --frames 1 --out " + (fx.root / "one.png").string());
  REQUIRE(one.status == 0);
  CHECK(spmc.num("psnr") >= one.num("psnr"));

  const auto cg = spmcsr_cli(base + " --solver cg --eps 1e-9 --out " + (fx.root / "cg.png").string());
  REQUIRE(cg.status == 0);
  CHECK(cg.num("cg_converged") == 1.0);
  CHECK(cg.num("psnr") >= 99.0);

  CHECK(spmcsr_cli(base + " --solver cg --align bw --out x.png").status == 2);
}

TEST_CASE("missing flow files are reported") {
  ExactFixture fx;
  const auto empty = fx.root / "noflows";
  fs::create_directories(empty);
  const auto r = spmcsr_cli("reconstruct " + fx.seq.string() + " --flows " + empty.string() + " --out " +
                            (fx.root / "x.png").string());
  CHECK(r.status == 2);
}

TEST_CASE("replaying a manifest reproduces the output bytes") {
  ExactFixture fx;
  const auto out = fx.root / "rec.png";
  REQUIRE(spmcsr_cli("reconstruct " + fx.seq.string() + " --flows " + fx.seq.string() + " --out " + out.string())
              .status == 0);
  const auto first = bytes_of(out);
  fs::remove(out);
  REQUIRE(spmcsr_cli("replay " + out.string() + ".manifest.txt").status == 0);
  CHECK(bytes_of(out) == first);

  CHECK(spmcsr_cli("replay " + (fx.root / "missing.txt").string()).status == 2);
}

TEST_CASE("degrade replay is byte identical") {
  const auto root = scratch_dir("cli_degrade_replay");
  fs::create_directories(root / "hr");
  write_image(root / "hr" / "a.png", quantized_texture(48, 48, 8));
  write_image(root / "hr" / "b.png", quantized_texture(48, 48, 9));
  const auto seq = root / "lr";
  REQUIRE(spmcsr_cli("degrade " + (root / "hr").string() + " " + seq.string() + " --alpha 3 --noise-sigma 0.01 --seed 5 " +
                     "--manifest " + (root / "m.txt").string())
              .status == 0);
  const auto a = bytes_of(seq / frame_file_name(1));
  fs::remove_all(seq);
  REQUIRE(spmcsr_cli("replay " + (root / "m.txt").string()).status == 0);
  CHECK(bytes_of(seq / frame_file_name(1)) == a);
  const auto m = RunManifest::read(root / "m.txt");
  CHECK(m.seed == 5);
}

TEST_CASE("bicubic degradation of 540x960 frames") {
  const auto root = scratch_dir("cli_bicubic");
  fs::create_directories(root / "hr");
  write_image(root / "hr" / "f.png", Image(Image::Constant(540, 960, 0.5)));
  const auto r = spmcsr_cli("degrade " + (root / "hr").string() + " " + (root / "lr").string() + " --alpha 4");
  REQUIRE(r.status == 0);
  CHECK(r.num("lr_width") == 240);
  CHECK(r.num("lr_height") == 135);
}

TEST_CASE("exact degradation with a shifts file") {
  const auto root = scratch_dir("cli_shifts");
  fs::create_directories(root / "hr");
  write_image(root / "hr" / "f.png", quantized_texture(32, 32, 11));
  std::ofstream(root / "shifts.txt") << "# dx dy\n0 0\n0.5 0\n";
  const auto r = spmcsr_cli("degrade " + (root / "hr").string() + " " + (root / "lr").string() +
                            " --alpha 2 --method exact --shifts " + (root / "shifts.txt").string());
  REQUIRE(r.status == 0);
  CHECK(r.num("frames") == 2);
  CHECK(fs::exists(root / "lr" / flow_to_ref_name(1)));
  CHECK_FALSE(fs::exists(root / "lr" / flow_to_ref_name(2)));
}

TEST_CASE("eval on identical inputs") {
  const auto root = scratch_dir("cli_eval");
  write_image(root / "a.png", quantized_texture(32, 32, 12));
  const auto r = spmcsr_cli("eval " + (root / "a.png").string() + " " + (root / "a.png").string() + " --border 2");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("psnr=99.0000") != std::string::npos);
  CHECK(r.out.find("ssim=1.0000") != std::string::npos);
  CHECK(spmcsr_cli("eval " + (root / "a.png").string() + " " + (root / "a.png").string() + " --metric foo").status ==
        2);
}

TEST_CASE("flow on identical frames is near zero") {
  const auto root = scratch_dir("cli_flow");
  write_image(root / "a.png", quantized_texture(32, 32, 13));
  const auto r = spmcsr_cli("flow " + (root / "a.png").string() + " " + (root / "a.png").string() + " --out " +
                            (root / "f.flo").string() + " --levels 2 --iters 20");
  REQUIRE(r.status == 0);
  const Flow f = read_flo(root / "f.flo");
  CHECK((f.u.square() + f.v.square()).sqrt().mean() <= 1e-3);
  CHECK(r.out.find("level=0 iter=0") != std::string::npos);
  CHECK(fs::exists(root / "f.flo.manifest.txt"));
}

TEST_CASE("verify reports each property") {
  const auto r = spmcsr_cli("verify --suite adjoint --trials 5 --seed 3");
  CHECK(r.status == 0);
  CHECK(r.out.find("adjoint S/S^T") != std::string::npos);
  CHECK(r.out.find("result=PASS") != std::string::npos);
  CHECK(spmcsr_cli("verify --suite nonsense").status == 2);
}
