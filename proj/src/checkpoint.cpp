#include "acdne/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "acdne/errors.hpp"

namespace acdne::nn {

namespace {

constexpr std::string_view kMagic = "acdne-checkpoint";

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

void Checkpoint::set_meta(std::string key, std::string value) {
  if (key.empty() || key.find_first_of(" \t\n") != std::string::npos) {
    throw ArgumentError("checkpoint meta key must be a single token: '" + key + "'");
  }
  if (value.find('\n') != std::string::npos) {
    throw ArgumentError("checkpoint meta value must fit on one line");
  }
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  meta.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> Checkpoint::get_meta(std::string_view key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const NamedTensor* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << kMagic << ' ' << Checkpoint::kVersion << '\n';
  for (const auto& [k, v] : checkpoint.meta) out << "meta " << k << ' ' << v << '\n';
  out << "vocabulary " << checkpoint.vocabulary.size() << '\n';
  for (const auto& name : checkpoint.vocabulary) out << name << '\n';
  for (const auto& t : checkpoint.tensors) {
    out << "tensor " << t.name << ' ' << t.values.rows() << ' ' << t.values.cols() << '\n';
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(t.values(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const auto file = path.string();
  std::size_t line_no = 0;
  std::string line;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError(file, line_no + 1, "unexpected end of file");
    ++line_no;
    return line;
  };

  {
    std::istringstream head(next_line());
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw ParseError(file, line_no, "not an acdne checkpoint");
    if (version != Checkpoint::kVersion) {
      throw ParseError(file, line_no, "unsupported checkpoint version " + std::to_string(version));
    }
  }

  Checkpoint ckpt;
  while (true) {
    const std::string& l = next_line();
    if (l == "end") break;
    if (l.rfind("meta ", 0) == 0) {
      const auto space = l.find(' ', 5);
      if (space == std::string::npos) {
        ckpt.meta.emplace_back(l.substr(5), "");
      } else {
        ckpt.meta.emplace_back(l.substr(5, space - 5), l.substr(space + 1));
      }
    } else if (l.rfind("vocabulary ", 0) == 0) {
      std::size_t count = 0;
      std::istringstream(l.substr(11)) >> count;
      ckpt.vocabulary.reserve(count);
      for (std::size_t i = 0; i < count; ++i) ckpt.vocabulary.push_back(next_line());
    } else if (l.rfind("tensor ", 0) == 0) {
      std::istringstream head(l.substr(7));
      NamedTensor t;
      Eigen::Index rows = -1;
      Eigen::Index cols = -1;
      head >> t.name >> rows >> cols;
      if (t.name.empty() || rows < 0 || cols < 0) throw ParseError(file, line_no, "bad tensor header");
      t.values.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const std::string& row = next_line();
        const char* p = row.data();
        const char* end = row.data() + row.size();
        for (Eigen::Index c = 0; c < cols; ++c) {
          while (p < end && *p == ' ') ++p;
          double v = 0;
          auto [ptr, ec] = std::from_chars(p, end, v);
          if (ec != std::errc()) throw ParseError(file, line_no, "bad tensor value");
          t.values(r, c) = v;
          p = ptr;
        }
        while (p < end && *p == ' ') ++p;
        if (p != end) throw ParseError(file, line_no, "too many values in tensor row");
      }
      ckpt.tensors.push_back(std::move(t));
    } else {
      throw ParseError(file, line_no, "unrecognised record '" + l + "'");
    }
  }
  return ckpt;
}

}  // namespace acdne::nn
