#include "bdrl/dataset.hpp"

#include "bdrl/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace bdrl {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no,
                            const std::string& what) {
  throw std::runtime_error("load_dataset: " + path + ":" +
                           std::to_string(line_no) + ": " + what);
}

int parse_int(const std::string& field, const std::string& path,
              std::size_t line_no) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail_line(path, line_no, "expected integer, got '" + field + "'");
  }
  return value;
}

double parse_double(const std::string& field, const std::string& path,
                    std::size_t line_no) {
  if (field.empty()) fail_line(path, line_no, "empty RSSI field");
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    fail_line(path, line_no, "expected number, got '" + field + "'");
  }
  return value;
}

struct ScanRow {
  std::optional<GridCell> label;
  std::vector<double> rssi;
};

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
}

}  // namespace

std::vector<FingerprintSample> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    throw std::runtime_error("load_dataset: empty file: " + path);
  }
  ++line_no;
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "row" || header[1] != "col") {
    fail_line(path, line_no, "header must start with 'row,col,rssi_1,...'");
  }
  const std::size_t beacon_count = header.size() - 2;
  for (std::size_t b = 0; b < beacon_count; ++b) {
    const std::string expected = "rssi_" + std::to_string(b + 1);
    if (header[b + 2] != expected) {
      fail_line(path, line_no, "expected column '" + expected + "', got '" +
                                   header[b + 2] + "'");
    }
  }

  std::vector<ScanRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != beacon_count + 2) {
      fail_line(path, line_no,
                "expected " + std::to_string(beacon_count + 2) + " fields, got " +
                    std::to_string(fields.size()));
    }
    ScanRow row;
    const bool row_empty = fields[0].empty();
    const bool col_empty = fields[1].empty();
    if (row_empty != col_empty) {
      fail_line(path, line_no, "row/col must both be set or both be empty");
    }
    if (!row_empty) {
      const int r = parse_int(fields[0], path, line_no);
      const int c = parse_int(fields[1], path, line_no);
      if (r < 0 || c < 0) fail_line(path, line_no, "negative cell coordinates");
      row.label = GridCell{r, c};
    }
    row.rssi.reserve(beacon_count);
    for (std::size_t b = 0; b < beacon_count; ++b) {
      const double v = parse_double(fields[b + 2], path, line_no);
      const bool sentinel = v == -200.0;
      if (!sentinel && (v < -100.0 || v > 0.0)) {
        fail_line(path, line_no,
                  "RSSI value " + fields[b + 2] + " outside [-100, 0] and not -200");
      }
      row.rssi.push_back(v);
    }
    rows.push_back(std::move(row));
  }

  // Bundle consecutive rows sharing a label (or consecutively unlabeled)
  // in threes; a label change resets the accumulator, dropping leftovers.
  std::vector<FingerprintSample> samples;
  std::vector<ScanRow> pending;
  auto same_key = [](const ScanRow& a, const ScanRow& b) {
    if (a.label.has_value() != b.label.has_value()) return false;
    return !a.label.has_value() || *a.label == *b.label;
  };
  for (ScanRow& row : rows) {
    if (!pending.empty() && !same_key(pending.back(), row)) pending.clear();
    pending.push_back(std::move(row));
    if (pending.size() == 3) {
      FingerprintSample sample;
      sample.label = pending.front().label;
      for (ScanRow& r : pending) sample.readings.push_back(std::move(r.rssi));
      samples.push_back(std::move(sample));
      pending.clear();
    }
  }
  return samples;
}

void save_dataset(const std::string& path,
                  std::span<const FingerprintSample> samples,
                  std::size_t beacon_count) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);

  out << "row,col";
  for (std::size_t b = 1; b <= beacon_count; ++b) out << ",rssi_" << b;
  out << '\n';

  for (const FingerprintSample& sample : samples) {
    if (sample.readings.size() != 3) {
      throw std::invalid_argument("save_dataset: sample must hold 3 scans");
    }
    for (const auto& scan : sample.readings) {
      if (scan.size() != beacon_count) {
        throw std::invalid_argument("save_dataset: scan width mismatch");
      }
      if (sample.labeled()) {
        out << sample.label->row << ',' << sample.label->col;
      } else {
        out << ',';
      }
      for (double v : scan) out << ',' << format_double(v);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("save_dataset: write failed: " + path);
}

std::vector<FingerprintSample> generate_dataset(const GridWorld& world,
                                                std::size_t labeled_per_cell,
                                                std::size_t unlabeled_total,
                                                SeededRng& rng) {
  world.validate();
  std::vector<FingerprintSample> samples;
  samples.reserve(labeled_per_cell * world.cell_count() + unlabeled_total);

  for (int k = 0; k < world.cell_count(); ++k) {
    const GridCell cell = world.class_to_cell(k);
    const auto center = world.cell_center(cell);
    for (std::size_t b = 0; b < labeled_per_cell; ++b) {
      FingerprintSample sample;
      sample.label = cell;
      for (int scan = 0; scan < 3; ++scan) {
        sample.readings.push_back(synth_rssi(world, center, rng));
      }
      samples.push_back(std::move(sample));
    }
  }
  for (std::size_t u = 0; u < unlabeled_total; ++u) {
    const std::array<double, 2> pos = {rng.uniform(0.0, world.width()),
                                       rng.uniform(0.0, world.height())};
    FingerprintSample sample;
    for (int scan = 0; scan < 3; ++scan) {
      sample.readings.push_back(synth_rssi(world, pos, rng));
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::uint64_t dataset_hash(std::span<const FingerprintSample> samples) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const FingerprintSample& sample : samples) {
    const unsigned char tag = sample.labeled() ? 'L' : 'U';
    hash_bytes(h, &tag, 1);
    if (sample.labeled()) {
      const std::int64_t rc[2] = {sample.label->row, sample.label->col};
      hash_bytes(h, rc, sizeof(rc));
    }
    for (const auto& scan : sample.readings) {
      hash_bytes(h, scan.data(), scan.size() * sizeof(double));
    }
  }
  return h;
}

}  // namespace bdrl
