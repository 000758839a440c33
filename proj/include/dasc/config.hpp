#pragma once

#include <map>
#include <string>
#include <vector>

#include "dasc/dataset.hpp"
#include "dasc/net.hpp"
#include "dasc/train.hpp"

namespace dasc {

// Union of generation, network, training, and ablation settings plus paths.
// Backed by a flat key=value text format; CLI flags override file values.
struct RunConfig {
    GenSpec gen;
    NetConfig net;
    TrainConfig train;
    AblationConfig ablation;
    std::string train_data;
    std::string test_data;
    std::string out_dir = ".";

    // Applies one key=value pair; throws std::invalid_argument on unknown
    // keys or unparsable values.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();

    void load_file(const std::string& path);
    void save_file(const std::string& path) const;
    std::map<std::string, std::string> to_map() const;

    // Stable hash of the full configuration, for sweep row identity.
    std::string hash() const;

    void validate() const;
};

}  // namespace dasc
