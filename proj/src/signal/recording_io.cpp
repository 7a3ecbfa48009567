#include "eegart/signal/recording_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "eegart/util/binary_io.hpp"
#include "eegart/util/errors.hpp"
#include "json.hpp"

namespace eegart::signal {

namespace fs = std::filesystem;

namespace {

double parse_double(std::string_view s, const fs::path& path, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": not a number: '" +
                      std::string(s) + "'");
  }
  return v;
}

fs::path stem_of(const fs::path& p) {
  if (p.extension() == ".json" || p.extension() == ".f32") return p.parent_path() / p.stem();
  return p;
}

fs::path with_suffix(const fs::path& stem, const char* suffix) {
  fs::path p = stem;
  p += suffix;
  return p;
}

}  // namespace

Recording read_recording_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_s,uv") throw FormatError(path.string() + ": expected header 't_s,uv'");
  std::vector<double> t, v;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": missing comma");
    t.push_back(parse_double(std::string_view(line).substr(0, comma), path, lineno));
    v.push_back(parse_double(std::string_view(line).substr(comma + 1), path, lineno));
  }
  Recording rec;
  rec.id = path.stem().string();
  if (v.empty()) {
    rec.rate_hz = 1.0;
    return rec;  // caller decides how to treat an empty recording
  }
  if (v.size() < 2) throw FormatError(path.string() + ": need at least two samples to infer the rate");
  const double span = t.back() - t.front();
  if (!(span > 0.0)) throw FormatError(path.string() + ": time column must increase");
  const double dt = span / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-3 * dt) {
      throw FormatError(path.string() + ": non-uniform sampling near t=" + std::to_string(t[i]));
    }
  }
  rec.rate_hz = 1.0 / dt;
  // Snap to the nearest integer rate when the column was printed with rounding.
  if (std::abs(rec.rate_hz - std::round(rec.rate_hz)) < 1e-6 * rec.rate_hz) rec.rate_hz = std::round(rec.rate_hz);
  rec.start_offset_s = t.front();
  rec.samples = std::move(v);
  return rec;
}

void write_recording_csv(const fs::path& path, const Recording& rec) {
  std::string out = "t_s,uv\n";
  char buf[96];
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const double t = rec.start_offset_s + static_cast<double>(i) / rec.rate_hz;
    std::snprintf(buf, sizeof buf, "%.9f,%.17g\n", t, rec.samples[i]);
    out += buf;
  }
  write_file_atomic(path, std::string_view(out));
}

Recording read_raw_recording(const fs::path& path) {
  const fs::path stem = stem_of(path);
  const fs::path sidecar = with_suffix(stem, ".json"), blob_path = with_suffix(stem, ".f32");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file_text(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar.string() + ": " + e.what());
  }
  Recording rec;
  double scale = 1.0;
  std::size_t n = 0;
  try {
    rec.id = meta.at("id").get<std::string>();
    rec.rate_hz = meta.at("rate_hz").get<double>();
    n = meta.at("n_samples").get<std::size_t>();
    scale = meta.at("scale_uv").get<double>();
    rec.start_offset_s = meta.value("start_offset_s", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar.string() + ": " + e.what());
  }
  if (!(rec.rate_hz > 0.0)) throw FormatError(sidecar.string() + ": rate_hz must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw FormatError(sidecar.string() + ": scale_uv must be positive");
  const auto bytes = read_file_bytes(blob_path);
  if (bytes.size() != 4 * n) {
    throw FormatError(blob_path.string() + ": expected " + std::to_string(4 * n) + " bytes, found " +
                      std::to_string(bytes.size()));
  }
  const auto stored = parse_f32_le(bytes);
  rec.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) rec.samples[i] = static_cast<double>(stored[i]) * scale;
  return rec;
}

void write_raw_recording(const fs::path& stem_in, const Recording& rec, double scale_uv) {
  if (!(scale_uv > 0.0)) throw std::invalid_argument("write_raw_recording: scale must be positive");
  const fs::path stem = stem_of(stem_in);
  std::vector<float> stored(rec.samples.size());
  for (std::size_t i = 0; i < stored.size(); ++i) stored[i] = static_cast<float>(rec.samples[i] / scale_uv);
  std::vector<std::uint8_t> blob;
  append_f32_le(blob, stored);
  nlohmann::ordered_json meta;
  meta["id"] = rec.id;
  meta["rate_hz"] = rec.rate_hz;
  meta["n_samples"] = rec.samples.size();
  meta["scale_uv"] = scale_uv;
  meta["start_offset_s"] = rec.start_offset_s;
  write_file_atomic(with_suffix(stem, ".f32"), std::span<const std::uint8_t>(blob));
  write_file_atomic(with_suffix(stem, ".json"), std::string_view(meta.dump(2) + "\n"));
}

Recording read_recording(const fs::path& path) {
  if (path.extension() == ".csv") return read_recording_csv(path);
  return read_raw_recording(path);
}

}  // namespace eegart::signal
