#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "acvae/trainer.hpp"

namespace acvae {

using KeyValues = std::map<std::string, std::string>;

// Flat "key = value" lines; '#' starts a comment. Throws ParseError on lines
// without '=' and on repeated keys.
KeyValues parse_key_values(const std::string& text, const std::string& origin = "<config>");
KeyValues read_config_file(const std::filesystem::path& path);

// Overrides the fields named in kv. Unknown keys and malformed values throw
// InputError.
void apply_config(TrainConfig& cfg, const KeyValues& kv);
KeyValues to_key_values(const TrainConfig& cfg);
std::string format_key_values(const KeyValues& kv);

// Defaults, then the config file (if any), then explicit overrides.
TrainConfig resolve_config(const std::filesystem::path* config_file, const KeyValues& overrides);

}  // namespace acvae
