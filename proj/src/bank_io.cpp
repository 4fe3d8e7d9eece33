#include "mqed/bank_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mqed/config.hpp"

namespace mqed {

using nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  [[nodiscard]] std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n)
      throw BankFormatError(std::string("truncated bank file while reading ") + what, data_.size());
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_bank(const ModeBank& bank, const std::filesystem::path& path) {
  if (!bank.medium) throw ContractError("save_bank: bank has no medium");
  const Grid& g = bank.grid();
  std::string out;
  out.reserve(kBankHeaderSize + bank.size() * (1 + 3 * g.cells()) * 8);
  out.append("QMB1", 4);
  put_u32(out, kBankVersion);
  for (int a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(g.dims[a]));
  put_f64(out, g.spacing);
  put_u32(out, static_cast<std::uint32_t>(bank.size()));
  out.push_back(static_cast<char>(bank.variant));
  for (std::size_t l = 0; l < bank.size(); ++l) {
    put_f64(out, bank.frequencies[l]);
    for (double v : bank.modes_g[l].values) put_f64(out, v);
  }

  const auto& m = *bank.medium;
  json side = {{"format", "QMB1"},
               {"version", kBankVersion},
               {"dims", g.dims},
               {"spacing", g.spacing},
               {"mode_count", bank.size()},
               {"variant", bank.variant == OperatorVariant::magnetic ? "magnetic" : "nonmagnetic"},
               {"medium", descriptor_to_json(m.descriptor())},
               {"mu", m.mu_descriptor() ? descriptor_to_json(*m.mu_descriptor()) : json(nullptr)},
               {"complete", bank.complete},
               {"tolerance", bank.tolerance},
               {"iterations", bank.iterations},
               {"gram_defect", bank.gram_defect},
               {"residuals", bank.residuals}};
  write_file_atomic(path, out);
  write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

ModeBank load_bank(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  json side;
  try {
    side = json::parse(read_all(sidecar_path(path)));
  } catch (const json::exception& e) {
    throw std::runtime_error("bad bank sidecar " + sidecar_path(path).string() + ": " + e.what());
  }

  Reader rd(data);
  rd.need(4, "magic");
  for (std::size_t i = 0; i < 4; ++i)
    if (data[i] != "QMB1"[i]) throw BankFormatError("bad magic, not a QMB1 bank file", i);
  for (int i = 0; i < 4; ++i) rd.u8("magic");
  const std::uint32_t version = rd.u32("version");
  if (version != kBankVersion)
    throw BankFormatError("unsupported bank version " + std::to_string(version), 4);

  const auto sdims = side.at("dims").get<std::array<int, 3>>();
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) {
    const std::size_t off = rd.offset();
    dims[a] = static_cast<int>(rd.u32("dims"));
    if (dims[a] != sdims[a]) throw BankFormatError("grid dims disagree with the sidecar", off);
  }
  std::size_t off = rd.offset();
  const double spacing = rd.f64("spacing");
  if (std::bit_cast<std::uint64_t>(spacing) !=
      std::bit_cast<std::uint64_t>(side.at("spacing").get<double>()))
    throw BankFormatError("grid spacing disagrees with the sidecar", off);
  off = rd.offset();
  const std::uint32_t count = rd.u32("mode count");
  if (count != side.at("mode_count").get<std::uint32_t>())
    throw BankFormatError("mode count disagrees with the sidecar", off);
  off = rd.offset();
  const std::uint8_t variant = rd.u8("variant");
  const std::uint8_t svariant = side.at("variant").get<std::string>() == "magnetic" ? 1 : 0;
  if (variant > 1 || variant != svariant)
    throw BankFormatError("operator variant byte is invalid or disagrees with the sidecar", off);

  const Grid g(dims, spacing);
  const std::size_t d = 3 * g.cells();
  const std::size_t expected = kBankHeaderSize + static_cast<std::size_t>(count) * (d + 1) * 8;
  if (data.size() < expected)
    throw BankFormatError("truncated bank file: expected " + std::to_string(expected) + " bytes",
                          data.size());
  if (data.size() > expected)
    throw BankFormatError("trailing bytes after the last mode", expected);

  std::optional<MediumDescriptor> mu;
  if (!side.at("mu").is_null()) mu = descriptor_from_json(side.at("mu"));
  auto medium =
      std::make_shared<const MediumProfile>(g, descriptor_from_json(side.at("medium")), mu);

  ModeBank bank;
  bank.medium = medium;
  bank.variant = static_cast<OperatorVariant>(variant);
  const QOperator op(medium, bank.variant);
  for (std::uint32_t l = 0; l < count; ++l) {
    bank.frequencies.push_back(rd.f64("frequency"));
    VectorField f(g, Placement::edge);
    for (std::size_t i = 0; i < d; ++i) f[i] = rd.f64("field");
    VectorField h = f;
    for (std::size_t i = 0; i < d; ++i) h[i] *= op.inv_sqrt_eps()[i];
    bank.modes_g.push_back(std::move(f));
    bank.modes_h.push_back(std::move(h));
  }
  bank.complete = side.at("complete").get<bool>();
  bank.tolerance = side.at("tolerance").get<double>();
  bank.iterations = side.at("iterations").get<int>();
  bank.gram_defect = side.at("gram_defect").get<double>();
  bank.residuals = side.at("residuals").get<std::vector<double>>();
  return bank;
}

}  // namespace mqed
