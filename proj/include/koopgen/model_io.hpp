#pragma once

#include <iosfwd>

#include "koopgen/krom.hpp"

namespace koopgen {

// Canonical decimal rendering used by every text format: 17 significant
// digits, enough for bit-exact double round trips.
std::string fmt17(double v);

// Versioned plain-text model file: self-describing header followed by
// row-major decimal matrices.
struct ModelFile {
    AnyModel model;
    double fit_residual = 0.0;
    std::string dataset_fingerprint;
};

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

std::string dictionary_to_header(const Dictionary& dict);

// FNV-1a over the sample payloads; stable across runs and platforms.
std::string dataset_fingerprint(const TrajectoryDataset& data);

void save_dataset(const std::string& path, const TrajectoryDataset& data);
TrajectoryDataset load_dataset(const std::string& path);

// Trajectory CSV: header row mandatory, >= 17 significant digits.
struct TrajectoryTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const TrajectoryTable& table);
TrajectoryTable read_csv(const std::string& path);

}  // namespace koopgen
