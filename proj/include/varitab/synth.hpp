#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varitab/schema.hpp"

namespace varitab {

// Synthetic binary-labeled tables. Signal columns carry a shared per-row
// latent factor; the label is a logistic function of their mean, remaining
// columns are pure noise. Every cell is numerical in [0,1].
struct SynthTableSpec {
    std::string name = "synth";
    size_t rows = 1000;
    std::vector<std::string> signal_columns;
    std::vector<std::string> noise_columns;
    double signal_strength = 1.0;  // 0 = pure chance labels
    double latent_mix = 0.7;       // latent weight inside each signal cell
    uint64_t seed = 1;
};

struct SynthTable {
    TableDataset data;
    std::vector<double> bayes;  // ground-truth P(y = 1) per row
};

SynthTable make_synth_table(const SynthTableSpec& spec);

// Standard multi-table construction: `shared_signal`/`shared_noise` column
// names are identical across the tables, private columns get per-table
// names that still share the signal/noise keywords.
struct SynthSuiteSpec {
    int tables = 2;
    std::vector<size_t> rows;  // one entry per table
    size_t columns = 8;        // per table
    size_t signal = 4;         // signal columns per table
    size_t shared_signal = 2;
    size_t shared_noise = 2;
    double strength = 1.0;
    uint64_t seed = 1;
};

std::vector<SynthTable> make_synth_suite(const SynthSuiteSpec& spec);

}  // namespace varitab
