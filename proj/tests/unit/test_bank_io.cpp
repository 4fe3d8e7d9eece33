#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "mqed/bank_io.hpp"
#include "mqed/emission.hpp"
#include "test_util.hpp"

using namespace mqed;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("mqed_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

const ModeBank& small_bank() {
  static const ModeBank bank = solve_modes(
      QOperator(testutil::profile(Grid(4, 5, 3, 0.7), {RandomSmooth{1.0, 3.0, 4, 3}})), 10);
  return bank;
}

}  // namespace

TEST_CASE("save, load and save again is byte identical") {
  TempDir dir("bank_roundtrip");
  const ModeBank& bank = small_bank();
  save_bank(bank, dir.path / "a.qmb");
  const ModeBank back = load_bank(dir.path / "a.qmb");
  save_bank(back, dir.path / "b.qmb");
  CHECK(slurp(dir.path / "a.qmb") == slurp(dir.path / "b.qmb"));
  CHECK(slurp(dir.path / "a.qmb.json") == slurp(dir.path / "b.qmb.json"));
  CHECK(slurp(dir.path / "a.qmb").size() == kBankHeaderSize + 10 * (3 * 60 + 1) * 8);

  REQUIRE(back.size() == bank.size());
  CHECK(back.grid() == bank.grid());
  CHECK(back.frequencies == bank.frequencies);
  CHECK(back.residuals == bank.residuals);
  CHECK(back.gram_defect == bank.gram_defect);
  CHECK(back.complete == bank.complete);
  CHECK(back.medium->eps().values == bank.medium->eps().values);
  for (std::size_t l = 0; l < bank.size(); ++l) {
    CHECK(back.modes_g[l].values == bank.modes_g[l].values);
    CHECK(back.modes_h[l].values == bank.modes_h[l].values);
  }
  CHECK_FALSE(fs::exists(dir.path / "a.qmb.tmp"));
}

TEST_CASE("magnetic banks keep their variant and mu") {
  TempDir dir("bank_magnetic");
  const Grid g(4, 4, 4);
  auto m = std::make_shared<const MediumProfile>(g, MediumDescriptor{Homogeneous{2.0}},
                                                 MediumDescriptor{Homogeneous{1.5}});
  const ModeBank bank = solve_modes(QOperator(m, OperatorVariant::magnetic), 6);
  save_bank(bank, dir.path / "m.qmb");
  const ModeBank back = load_bank(dir.path / "m.qmb");
  CHECK(back.variant == OperatorVariant::magnetic);
  CHECK(back.medium->magnetic());
  CHECK(back.medium->mu().values == bank.medium->mu().values);
}

TEST_CASE("every corrupted header byte is reported at its field") {
  TempDir dir("bank_corrupt");
  save_bank(small_bank(), dir.path / "ok.qmb");
  const std::string good = slurp(dir.path / "ok.qmb");
  const std::string side = slurp(dir.path / "ok.qmb.json");
  // Field starts and sizes in the header.
  const std::vector<std::pair<std::size_t, std::size_t>> fields{
      {0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 4}, {8, 4}, {12, 4}, {16, 4}, {20, 8}, {28, 4}, {32, 1}};
  for (std::size_t byte = 0; byte < kBankHeaderSize; ++byte) {
    std::string bad = good;
    bad[byte] = static_cast<char>(bad[byte] ^ 0x5a);
    spit(dir.path / "bad.qmb", bad);
    spit(dir.path / "bad.qmb.json", side);
    std::size_t start = 0, size = 0;
    for (const auto& [s, n] : fields)
      if (byte >= s && byte < s + n) start = s, size = n;
    CAPTURE(byte);
    try {
      (void)load_bank(dir.path / "bad.qmb");
      FAIL("corruption not detected");
    } catch (const BankFormatError& e) {
      CHECK(e.offset() >= start);
      CHECK(e.offset() < start + size);
    }
  }

  spit(dir.path / "short.qmb", good.substr(0, good.size() - 3));
  spit(dir.path / "short.qmb.json", side);
  try {
    (void)load_bank(dir.path / "short.qmb");
    FAIL("truncation not detected");
  } catch (const BankFormatError& e) {
    CHECK(e.offset() == good.size() - 3);
  }
  spit(dir.path / "long.qmb", good + "x");
  spit(dir.path / "long.qmb.json", side);
  CHECK_THROWS_AS((void)load_bank(dir.path / "long.qmb"), BankFormatError);
  spit(dir.path / "tiny.qmb", "QM");
  spit(dir.path / "tiny.qmb.json", side);
  CHECK_THROWS_AS((void)load_bank(dir.path / "tiny.qmb"), BankFormatError);
}

TEST_CASE("a reloaded bank gives the same ldos") {
  TempDir dir("bank_ldos");
  const ModeBank bank =
      solve_modes(QOperator(testutil::profile(Grid(12, 12, 12), {Homogeneous{2.0}})), 40);
  save_bank(bank, dir.path / "v.qmb");
  const ModeBank back = load_bank(dir.path / "v.qmb");
  std::vector<double> omegas;
  for (int i = 0; i < 20; ++i) omegas.push_back(0.2 + 0.02 * i);
  const auto a = ldos_spectrum(bank, {6.2, 3.3, 7.9}, {1, 1, 0}, omegas, 0.05);
  const auto b = ldos_spectrum(back, {6.2, 3.3, 7.9}, {1, 1, 0}, omegas, 0.05);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);
}
