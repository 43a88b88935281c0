#include "cmpsearch/oracle.hpp"

#include <sstream>

namespace cmpsearch {

Answer noisy_answer(Answer inner, double epsilon, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < epsilon ? flip(inner) : inner;
}

NoisyOracle::NoisyOracle(Oracle& inner, double epsilon, std::uint64_t seed)
    : inner_(&inner), epsilon_(epsilon), rng_(seed) {
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InputError("noise rate epsilon must lie in [0, 0.5)");
}

Answer NoisyOracle::ask(ItemId x, ItemId y) {
    ++calls_;
    return noisy_answer(inner_->ask(x, y), epsilon_, rng_);
}

bool is_tie(Oracle& oracle, ItemId x, ItemId y) {
    const Answer a = oracle.ask(x, y);
    const Answer b = oracle.ask(y, x);
    return a == Answer::minus && b == Answer::minus;
}

void OracleConfig::validate() const {
    if (kind == Kind::noisy && !(epsilon >= 0.0 && epsilon < 0.5))
        throw InputError("noise rate epsilon must lie in [0, 0.5)");
}

std::string transcript_jsonl(const QueryLog& log, const ItemId* result) {
    std::ostringstream os;
    std::size_t seq = 0;
    for (const auto& e : log.entries()) {
        nlohmann::json line = {{"seq", seq++}, {"x", e.x}, {"y", e.y}, {"answer", to_int(e.answer)}};
        os << line.dump() << '\n';
    }
    if (result) os << nlohmann::json{{"result", *result}, {"queries", log.query_count()}}.dump() << '\n';
    return os.str();
}

}  // namespace cmpsearch
