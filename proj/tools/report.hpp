#pragma once
#include <filesystem>
#include <vector>

// Writes SVG plots for the given run directories; returns the exit status.
int cmd_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out);
