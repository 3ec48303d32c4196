#pragma once

#include "streamlens/config.hpp"
#include "streamlens/io.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace streamlens::service {

struct SectionStatus {
    bool present = false;
    std::string reason;  // why a section is absent
};

struct BuildResult {
    std::string snapshot_id;
    std::filesystem::path dir;
    std::map<std::string, SectionStatus> sections;
    bool reused = false;  // an identical snapshot was already in the store
};

using ProgressFn = std::function<void(std::string_view)>;

/// Runs every configured section over the corpus and persists the result
/// atomically under <store>/<snapshot_id>. Sections whose inputs are not
/// configured or not on disk are recorded as absent. Identical corpus and
/// config yield an identical snapshot id and identical bytes.
BuildResult snapshot_build(const AnalysisConfig& config, const ProgressFn& progress = {});

/// Snapshot id: SHA-256 over the manifest without its own id line.
std::string manifest_digest(const io::KeyValues& manifest);

/// Recomputes file hashes against the manifest; throws InputError on mismatch.
void verify_snapshot(const std::filesystem::path& dir);

struct SnapshotInfo {
    std::string snapshot_id;
    std::string created_at;
    std::string config_digest;
    std::filesystem::path dir;
    std::map<std::string, SectionStatus> sections;
};

SnapshotInfo read_snapshot_info(const std::filesystem::path& dir);
/// Snapshots in a store, ordered by creation time then id.
std::vector<SnapshotInfo> list_snapshots(const std::filesystem::path& store);

}  // namespace streamlens::service
