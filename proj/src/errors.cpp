#include "mwqed/errors.hpp"

#include <iostream>
#include <mutex>

namespace mwqed {

namespace {
std::mutex g_mu;
void print_warning(const std::string& m) { std::cerr << "warning: " << m << '\n'; }
WarningHandler& handler() {
    static WarningHandler h = print_warning;
    return h;
}
}  // namespace

void set_warning_handler(WarningHandler h) {
    std::lock_guard lock(g_mu);
    handler() = h ? std::move(h) : WarningHandler(print_warning);
}

void warn(const std::string& msg) {
    std::lock_guard lock(g_mu);
    if (handler()) handler()(msg);
}

}  // namespace mwqed
