#include "tokendrop/textgen.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "tokendrop/rng.hpp"

namespace tokendrop {

namespace {

const char* kDeterminers[] = {"the", "the", "the", "a", "a", "this", "that", "each", "every", "another"};

const char* kPrepositions[] = {"of", "in", "on", "with", "from", "by", "at", "under",
                               "over", "through", "near", "against", "beyond", "between"};

const char* kCopulas[] = {"was", "is", "were", "are", "seemed", "remained", "became"};

const char* kPronouns[] = {"it", "he", "she", "they", "we", "you"};

const char* kConjunctions[] = {"and", "and", "but", "or", "while", "because", "although", "until"};

const char* kNouns[] = {
    "time", "man", "house", "day", "water", "road", "woman", "light", "door", "night", "eye", "hand",
    "room", "tree", "voice", "wall", "fire", "wind", "stone", "river", "child", "mountain", "garden",
    "table", "window", "horse", "ship", "bird", "city", "field", "forest", "village", "king", "sea",
    "sun", "moon", "star", "cloud", "rain", "snow", "grass", "flower", "leaf", "branch", "root",
    "hill", "valley", "lake", "island", "shore", "wave", "storm", "path", "bridge", "gate", "tower",
    "castle", "church", "market", "street", "corner", "roof", "floor", "stair", "chamber", "hall",
    "kitchen", "cellar", "mirror", "candle", "lamp", "clock", "bell", "book", "letter", "page", "word",
    "story", "song", "dream", "thought", "memory", "name", "face", "smile", "shadow", "silence",
    "sound", "step", "journey", "meeting", "question", "answer", "reason", "secret", "truth", "lie",
    "promise", "hope", "fear", "joy", "sorrow", "anger", "pride", "shame", "courage", "doubt",
    "soldier", "sailor", "farmer", "merchant", "doctor", "teacher", "student", "painter", "writer",
    "hunter", "servant", "master", "guest", "stranger", "friend", "enemy", "neighbor", "brother",
    "sister", "mother", "father", "daughter", "son", "uncle", "aunt", "cousin", "captain", "queen",
    "prince", "princess", "judge", "priest", "baker", "smith", "miller", "shepherd", "fisherman",
    "dog", "cat", "wolf", "fox", "bear", "deer", "rabbit", "mouse", "sheep", "goat", "cow", "pig",
    "eagle", "owl", "crow", "swan", "fish", "snake", "spider", "bee", "coat", "hat", "shoe", "glove",
    "ring", "sword", "shield", "arrow", "spear", "rope", "basket", "bottle", "cup", "plate", "knife",
    "spoon", "chair", "bench", "bed", "blanket", "pillow", "chest", "box", "key", "lock", "coin",
    "purse", "jewel", "crown", "cloak", "boat", "cart", "wheel", "sail", "anchor", "net", "hammer",
    "nail", "ladder", "bucket", "well", "barn", "stable", "mill", "forge", "bread", "meat", "fruit",
    "apple", "grape", "corn", "wheat", "honey", "milk", "wine", "salt", "winter", "summer", "spring",
    "autumn", "morning", "evening", "noon", "midnight", "week", "month", "year", "hour", "moment",
    "season", "harvest", "feast", "fair", "dance", "game", "race", "battle", "war", "peace",
    "kingdom", "country", "land", "border", "north", "south", "east", "west", "distance", "middle",
};

const char* kTransitiveVerbs[] = {
    "saw", "found", "took", "held", "carried", "brought", "gave", "sent", "left", "kept", "lost",
    "made", "built", "broke", "opened", "closed", "filled", "covered", "followed", "led", "crossed",
    "reached", "touched", "caught", "struck", "pushed", "pulled", "lifted", "dropped", "threw",
    "watched", "heard", "knew", "remembered", "forgot", "loved", "hated", "feared", "trusted",
    "asked", "told", "answered", "called", "named", "taught", "showed", "hid", "sought", "guarded",
    "served", "obeyed", "ruled", "owned", "sold", "bought", "traded", "stole", "returned", "repaired",
    "painted", "wrote", "read", "sang", "played", "burned", "buried", "planted", "gathered", "picked",
    "cut", "tied", "wrapped", "wore", "washed", "cooked", "ate", "drank", "tasted", "smelled",
    "chose", "refused", "accepted", "offered", "promised", "forgave", "blamed", "praised", "warned",
    "greeted", "visited", "joined", "helped", "saved", "freed", "chased", "hunted", "trapped",
    "crushed", "bent", "shook", "turned", "moved", "placed", "raised", "lowered", "measured",
    "counted", "weighed", "divided", "shared", "mixed", "poured", "emptied", "loaded", "dragged",
};

const char* kIntransitiveVerbs[] = {
    "slept", "woke", "waited", "stayed", "walked", "ran", "rode", "sailed", "swam", "climbed",
    "fell", "rose", "stood", "sat", "knelt", "lay", "wandered", "traveled", "arrived", "departed",
    "returned", "escaped", "vanished", "appeared", "smiled", "laughed", "wept", "sighed", "trembled",
    "shivered", "listened", "dreamed", "prayed", "worked", "rested", "danced", "sang", "spoke",
    "whispered", "shouted", "answered", "paused", "hurried", "stumbled", "drifted", "floated",
    "burned", "froze", "melted", "faded", "shone", "glittered", "echoed", "settled", "gathered",
    "parted", "agreed", "argued", "suffered", "recovered",
};

const char* kAdjectives[] = {
    "old", "young", "small", "great", "long", "short", "high", "low", "dark", "bright", "cold",
    "warm", "dry", "wet", "deep", "shallow", "wide", "narrow", "heavy", "light", "strong", "weak",
    "quiet", "loud", "slow", "quick", "soft", "hard", "smooth", "rough", "clean", "dirty", "rich",
    "poor", "happy", "sad", "kind", "cruel", "brave", "timid", "wise", "foolish", "honest", "false",
    "proud", "humble", "calm", "restless", "empty", "full", "open", "hidden", "distant", "near",
    "ancient", "new", "broken", "whole", "sharp", "dull", "pale", "red", "white", "black", "green",
    "blue", "golden", "silver", "gray", "brown", "hollow", "solid", "gentle", "fierce", "silent",
    "strange", "familiar", "beautiful", "plain", "crooked", "straight", "bitter", "sweet", "sour",
    "fresh", "stale", "early", "late", "lonely", "crowded", "narrow", "steep", "flat", "frozen",
    "burning", "shining", "fading", "sleeping", "waking", "living", "forgotten", "faithful",
    "careful", "careless", "patient", "eager", "weary", "hungry", "thirsty", "sick", "healthy",
    "blind", "deaf", "lame", "swift", "clever", "simple", "noble", "common", "royal", "sacred",
};

const char* kAdverbs[] = {
    "slowly", "quickly", "quietly", "loudly", "gently", "suddenly", "carefully", "carelessly",
    "often", "rarely", "always", "never", "soon", "late", "early", "again", "alone", "together",
    "far", "near", "here", "there", "away", "back", "forward", "inside", "outside", "upward",
    "downward", "everywhere", "nowhere", "somewhere", "once", "twice", "still", "already",
    "finally", "gradually", "barely", "almost",
};

template <size_t N>
const char* zipf_pick(const char* (&pool)[N], Rng& rng) {
    // Zipf-like weighting within the pool; earlier entries dominate.
    static_assert(N > 0);
    double u = rng.uniform();
    // Inverse-CDF of p(i) ~ 1/(i+1): cumulative is ~ log; cheap approximation
    // via exponentiation keeps the head heavy without a table.
    double x = std::pow(static_cast<double>(N) + 1.0, u) - 1.0;
    size_t i = static_cast<size_t>(x);
    if (i >= N) i = N - 1;
    return pool[i];
}

template <size_t N>
const char* flat_pick(const char* (&pool)[N], Rng& rng) {
    return pool[rng.below(static_cast<int>(N))];
}

class SentenceWriter {
public:
    SentenceWriter(std::ostream& out, Rng& rng) : out_(out), rng_(rng) {}

    uint64_t tokens_written() const { return tokens_; }

    void word(const char* w) {
        if (!first_) out_ << ' ';
        out_ << w;
        first_ = false;
        tokens_ += 1;
    }

    void comma() {
        out_ << " ,";
        tokens_ += 1;
    }

    void end_sentence() {
        out_ << '.';
        first_ = false;
    }

    void newline() {
        out_ << '\n';
        first_ = true;
    }

    void noun_phrase(bool allow_pp) {
        word(flat_pick(kDeterminers, rng_));
        if (rng_.uniform() < 0.45) word(zipf_pick(kAdjectives, rng_));
        word(zipf_pick(kNouns, rng_));
        if (allow_pp && rng_.uniform() < 0.3) {
            word(flat_pick(kPrepositions, rng_));
            noun_phrase(false);
        }
    }

    void verb_phrase() {
        double r = rng_.uniform();
        if (r < 0.4) {
            word(zipf_pick(kTransitiveVerbs, rng_));
            noun_phrase(true);
        } else if (r < 0.65) {
            word(zipf_pick(kIntransitiveVerbs, rng_));
            if (rng_.uniform() < 0.4) word(zipf_pick(kAdverbs, rng_));
            if (rng_.uniform() < 0.35) {
                word(flat_pick(kPrepositions, rng_));
                noun_phrase(false);
            }
        } else if (r < 0.85) {
            word(flat_pick(kCopulas, rng_));
            word(zipf_pick(kAdjectives, rng_));
            if (rng_.uniform() < 0.25) {
                word(flat_pick(kPrepositions, rng_));
                noun_phrase(false);
            }
        } else {
            word(flat_pick(kCopulas, rng_));
            word(flat_pick(kPrepositions, rng_));
            noun_phrase(false);
        }
    }

    void sentence() {
        if (rng_.uniform() < 0.2)
            word(flat_pick(kPronouns, rng_));
        else
            noun_phrase(true);
        verb_phrase();
        if (rng_.uniform() < 0.3) {
            comma();
            word(flat_pick(kConjunctions, rng_));
            if (rng_.uniform() < 0.5) word(flat_pick(kPronouns, rng_));
            verb_phrase();
        }
        end_sentence();
    }

private:
    std::ostream& out_;
    Rng& rng_;
    uint64_t tokens_ = 0;
    bool first_ = true;
};

}  // namespace

void generate_corpus(std::ostream& out, uint64_t target_tokens, uint64_t seed) {
    Rng rng(mix_seed(seed, seed_tag::kCorpus));
    SentenceWriter writer(out, rng);
    while (writer.tokens_written() < target_tokens) {
        const int sentences = 3 + rng.below(6);
        for (int s = 0; s < sentences; ++s) writer.sentence();
        writer.newline();
    }
}

}  // namespace tokendrop
