#include "wayfarer/templates.hpp"

#include <cctype>

namespace wayfarer::templates {

std::string fill(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& slots) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            auto close = tpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto name = tpl.substr(i + 1, close - i - 1);
                bool identifier = !name.empty();
                for (char c : name) {
                    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') identifier = false;
                }
                if (identifier) {
                    if (auto it = slots.find(name); it != slots.end()) {
                        out += it->second;
                        i = close + 1;
                        continue;
                    }
                }
            }
        }
        out.push_back(tpl[i]);
        ++i;
    }
    return out;
}

}  // namespace wayfarer::templates
