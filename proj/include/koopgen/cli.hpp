#pragma once

#include <optional>
#include <string>

namespace koopgen::cli {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool plot_script = false;  // emit a companion plotting script next to the CSV
};

// Exit codes: 0 success, 1 numerical failure, 2 usage/config error.
int cmd_train(const std::string& config_path, const Overrides& ov);
int cmd_predict(const std::string& config_path, const Overrides& ov);
int cmd_mpc(const std::string& config_path, const Overrides& ov);
int cmd_validate(const std::string& config_path, const Overrides& ov);

}  // namespace koopgen::cli
