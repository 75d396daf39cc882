#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qarena/qtable.hpp"
#include "qarena/trainer.hpp"

namespace qarena {

inline constexpr std::uint16_t kSnapshotVersion = 1;

// Binary layout, little-endian:
//   "QARN" | version u16 | game u8 | reserved u8 | alpha f64 | gamma f64 |
//   epsilon f64 | episodes u64 | entry count u64 |
//   entries (key length u16, key bytes, action count u16, f64 values) |
//   CRC32 of everything before it (u32)
// Entries are sorted by key, so equal tables give identical bytes.
std::string encode_snapshot(const QTable& q);

// Errors: "bad_magic", "unsupported_version", "corrupt" (checksum or truncation).
QTable decode_snapshot(const std::string& bytes);

// Writes through a temporary file, fsyncs and renames. Errors: "io_error".
void save_snapshot(const QTable& q, const std::filesystem::path& path);
QTable load_snapshot(const std::filesystem::path& path);

// Run directory layout written by train():
//   manifest.txt, curve.csv, snapshots/ep_<episode>.qsnap, snapshots/fs_ep_<episode>.qsnap
std::string snapshot_file_name(std::uint64_t episode);
std::string fs_snapshot_file_name(std::uint64_t episode);

std::string manifest_text(const TrainingRun& run);
void write_run_files(const TrainingRun& run);

// Reads manifest.txt (and curve.csv when present). Errors: "run_not_found", "bad_manifest".
TrainingRun read_run(const std::filesystem::path& dir);

struct ResolvedSnapshot {
  std::uint64_t target = 0;   // round(percent / 100 * N)
  std::uint64_t episode = 0;  // snapshot actually chosen
  std::filesystem::path path;
};

// Snapshot nearest round(percent/100 * convergence_fs), ties toward the earlier.
// Errors: "run_not_converged", "bad_percent", "snapshot_gap".
ResolvedSnapshot resolve_percent(const TrainingRun& run, double percent);

// The resolved snapshot as a greedy Q agent spec ("q:<path>").
AgentSpec percent_agent(const TrainingRun& run, double percent);

}  // namespace qarena
