// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llmprop/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Crystal property prediction from text descriptions"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    for (const auto& name : llmprop::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", overrides, "override one key (key=value), repeatable");
        sub->add_option("--out", out_dir, "output directory")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(llmprop::ErrorKind::config);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        llmprop::Config config = llmprop::Config::defaults();
        if (!config_path.empty()) config.merge_file(config_path);
        for (const auto& o : overrides) config.set(o);
        llmprop::run_command(command, config, out_dir, std::cout);
    } catch (const llmprop::Error& e) {
        std::cerr << "llmprop " << command << ": " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "llmprop " << command << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
