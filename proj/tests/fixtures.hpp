#pragma once

#include <string>

#include "ssr/model.hpp"

namespace ssr::test {

inline std::string data_path(const std::string& name) { return std::string(SSR_DATA_DIR) + "/" + name; }

inline SystemModel two_area() { return load_model_file(data_path("two_area.cfg")); }

/// One generator on bus "a" tied to slack load bus "b" through x = 0.5.
inline constexpr const char* kMinimalConfig = R"(
[bus]
id = a
role = generator

[bus]
id = b
role = slack

[line]
from = a
to = b
x_pu = 0.5

[generator]
id = G
bus = a
dispatch_mw = 100
h = 0.9 0.25 0.9 0.9 0.25
k = 20 35 50 70
bf = 0.3 0.3 0.3 0.1

[load]
bus = b
mw = 100
)";

}  // namespace ssr::test
