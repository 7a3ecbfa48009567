#pragma once

#include <filesystem>

#include "eegart/signal/recording.hpp"

namespace eegart::signal {

// Headered CSV with columns `t_s,uv`. The rate is derived from the time
// column, which must be uniformly spaced; start_offset_s is the first t_s.
// The id is the file stem.
Recording read_recording_csv(const std::filesystem::path& path);
void write_recording_csv(const std::filesystem::path& path, const Recording& rec);

// Raw format: `<stem>.json` sidecar {id, rate_hz, n_samples, scale_uv,
// start_offset_s} next to `<stem>.f32`, little-endian binary32 samples with
// value_uv = stored * scale_uv. `path` may name either file or the stem.
Recording read_raw_recording(const std::filesystem::path& path);
void write_raw_recording(const std::filesystem::path& stem, const Recording& rec,
                         double scale_uv = 1.0);

// Dispatches on extension: .csv, otherwise raw.
Recording read_recording(const std::filesystem::path& path);

}  // namespace eegart::signal
