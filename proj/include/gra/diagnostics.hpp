#pragma once

#include <functional>
#include <string_view>

namespace gra {

using WarningSink = std::function<void(std::string_view)>;

/// Emit a non-fatal diagnostic. Defaults to stderr; tests may redirect.
void warn(std::string_view message);

/// Installs a sink and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace gra
