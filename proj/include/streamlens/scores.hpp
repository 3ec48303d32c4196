#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace streamlens {

/// Per-account scores in [0,1] from one external bot detector.
struct BotScoreTable {
    std::string detector_name;
    std::unordered_map<std::string, double> scores;
    double default_threshold = 0.5;

    std::optional<double> find(std::string_view account_id) const {
        auto it = scores.find(std::string(account_id));
        if (it == scores.end()) return std::nullopt;
        return it->second;
    }
    std::size_t size() const { return scores.size(); }
};

/// Reads `account_id,score`. Scores outside [0,1] or duplicate accounts
/// raise InputError.
BotScoreTable load_scores(const std::filesystem::path& csv, std::string detector_name,
                          double default_threshold = 0.5);

}  // namespace streamlens
