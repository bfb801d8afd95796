#pragma once

#include <string_view>

namespace confusable {

std::string_view version_string();
std::string_view git_stamp();

}  // namespace confusable
