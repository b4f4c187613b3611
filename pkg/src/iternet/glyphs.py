"""Committed 5x7 bitmap glyphs and the word list for synthetic labels.

Embedding the font as data keeps renders byte-identical across platforms;
no system font is ever touched.  Each glyph is 7 rows of 5 cells, '#' = ink.
"""

GLYPH_ROWS = 7
GLYPH_COLS = 5

GLYPHS = {
    "a": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "b": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "c": (".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),
    "d": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "e": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "f": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "g": (".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"),
    "h": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "i": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "j": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "k": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "l": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "m": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "n": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "o": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "p": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "r": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "s": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "t": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "u": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "v": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "w": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"),
    "x": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
}

# Lowercase words of length 3-7 used for dataset labels; repeated exposure to
# these gives the language module learnable statistics.
WORDS = (
    "able", "about", "above", "act", "add", "after", "again", "age", "ago",
    "air", "all", "also", "always", "and", "animal", "answer", "any", "are",
    "area", "arm", "art", "ask", "away", "baby", "back", "bad", "ball",
    "band", "bank", "base", "battle", "bay", "bear", "beat", "bed", "been",
    "before", "began", "begin", "behind", "bell", "best", "better", "big",
    "bird", "bit", "black", "block", "blood", "blue", "board", "boat",
    "body", "bone", "book", "born", "both", "box", "boy", "branch", "bread",
    "break", "bridge", "bright", "bring", "broad", "brown", "build", "burn",
    "busy", "but", "buy", "call", "came", "camp", "can", "car", "card",
    "care", "carry", "case", "cat", "catch", "cause", "cell", "cent",
    "center", "charge", "chart", "check", "chief", "child", "choose",
    "circle", "city", "claim", "class", "clean", "clear", "climb", "clock",
    "close", "cloud", "coast", "cold", "color", "come", "common", "cook",
    "cool", "copy", "corn", "corner", "cost", "count", "course", "cover",
    "cow", "create", "crop", "cross", "crowd", "cry", "cut", "dance",
    "dark", "day", "dead", "deal", "dear", "decide", "deep", "degree",
    "desert", "design", "die", "direct", "dog", "dollar", "done", "door",
    "down", "draw", "dream", "dress", "drink", "drive", "drop", "dry",
    "duck", "during", "each", "ear", "early", "earth", "east", "easy",
    "eat", "edge", "effect", "egg", "eight", "either", "else", "end",
    "enemy", "energy", "engine", "enough", "enter", "equal", "even",
    "event", "ever", "every", "exact", "except", "eye", "face", "fact",
    "fair", "fall", "family", "far", "farm", "fast", "father", "fear",
    "feed", "feel", "feet", "fell", "felt", "few", "field", "fight",
    "figure", "fill", "final", "find", "fine", "finger", "fire", "first",
    "fish", "fit", "five", "flat", "floor", "flow", "flower", "fly",
    "follow", "food", "foot", "for", "force", "forest", "form", "found",
    "four", "free", "fresh", "friend", "from", "front", "fruit", "full",
    "fun", "game", "garden", "gas", "gather", "gave", "get", "girl",
    "give", "glad", "glass", "gold", "gone", "good", "got", "grand",
    "grass", "great", "green", "grew", "ground", "group", "grow", "guess",
    "guide", "gun", "hair", "half", "hand", "happen", "happy", "hard",
    "has", "hat", "have", "head", "hear", "heard", "heart", "heat",
    "heavy", "held", "help", "her", "here", "high", "hill", "him", "his",
    "hit", "hold", "hole", "home", "hope", "horse", "hot", "hour", "house",
    "how", "huge", "human", "hunt", "ice", "idea", "inch", "insect",
    "inside", "into", "iron", "island", "job", "join", "joy", "jump",
    "just", "keep", "kept", "key", "kill", "kind", "king", "knew", "know",
    "lady", "lake", "land", "large", "last", "late", "laugh", "law", "lay",
    "lead", "learn", "least", "leave", "left", "leg", "length", "less",
    "let", "letter", "level", "lie", "life", "lift", "light", "like",
    "line", "list", "listen", "little", "live", "long", "look", "lost",
    "lot", "loud", "love", "low", "machine", "made", "main", "major",
    "make", "man", "many", "map", "mark", "market", "mass", "match",
    "matter", "may", "mean", "meat", "meet", "melody", "men", "metal",
    "middle", "might", "mile", "milk", "million", "mind", "mine", "minute",
    "miss", "mix", "modern", "moment", "money", "month", "moon", "more",
    "most", "mother", "motion", "mount", "mouth", "move", "much", "music",
    "must", "name", "nation", "nature", "near", "neck", "need", "never",
    "new", "next", "night", "nine", "nor", "north", "nose", "note",
    "nothing", "notice", "noun", "now", "number", "object", "ocean", "off",
    "offer", "office", "often", "oil", "old", "once", "one", "only",
    "open", "order", "other", "our", "out", "over", "own", "page", "paint",
    "pair", "paper", "part", "party", "pass", "past", "path", "pattern",
    "pay", "people", "per", "phrase", "pick", "picture", "piece", "place",
    "plain", "plan", "plane", "planet", "plant", "play", "please", "point",
    "pose", "post", "pound", "power", "press", "pretty", "print", "probable",
    "produce", "product", "proper", "prove", "pull", "push", "put",
    "question", "quick", "quiet", "quite", "race", "radio", "rain",
    "raise", "ran", "reach", "read", "ready", "real", "reason", "record",
    "red", "region", "rest", "result", "rich", "ride", "right", "ring",
    "rise", "river", "road", "rock", "roll", "room", "root", "rope",
    "rose", "round", "row", "rule", "run", "safe", "said", "sail", "salt",
    "same", "sand", "sat", "save", "saw", "say", "scale", "school",
    "score", "sea", "search", "season", "seat", "second", "see", "seed",
    "seem", "self", "sell", "send", "sense", "sent", "serve", "set",
    "settle", "seven", "shape", "share", "sharp", "she", "sheet", "shell",
    "shine", "ship", "shoe", "shop", "shore", "short", "should", "shout",
    "show", "side", "sight", "sign", "silent", "silver", "simple", "since",
    "sing", "single", "sister", "sit", "six", "size", "skill", "skin",
    "sky", "sleep", "slip", "slow", "small", "smell", "smile", "snow",
    "soft", "soil", "sold", "solve", "some", "son", "song", "soon",
    "sound", "south", "space", "speak", "speed", "spell", "spend", "spoke",
    "spot", "spread", "spring", "square", "stand", "star", "start", "state",
    "stay", "stead", "steam", "steel", "step", "stick", "still", "stone",
    "stood", "stop", "store", "story", "street", "stretch", "string",
    "strong", "study", "subject", "such", "sudden", "sugar", "suit",
    "summer", "sun", "supply", "sure", "surface", "swim", "symbol", "table",
    "tail", "take", "talk", "tall", "teach", "team", "teeth", "tell",
    "ten", "term", "test", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "thick", "thin", "thing", "think", "third",
    "this", "those", "though", "three", "through", "thus", "tie", "time",
    "tiny", "tire", "told", "tone", "too", "took", "tool", "top", "total",
    "touch", "toward", "town", "track", "trade", "train", "travel", "tree",
    "trip", "trouble", "truck", "true", "try", "turn", "twenty", "two",
    "type", "under", "unit", "until", "up", "use", "usual", "valley",
    "value", "very", "view", "voice", "vowel", "wait", "walk", "wall",
    "want", "war", "warm", "was", "wash", "watch", "water", "wave", "way",
    "wear", "week", "weight", "well", "went", "were", "west", "what",
    "wheel", "when", "where", "which", "while", "white", "who", "whole",
    "whose", "why", "wide", "wife", "wild", "will", "win", "wind",
    "window", "wing", "winter", "wire", "wish", "with", "woman", "women",
    "wonder", "wood", "word", "wore", "work", "world", "would", "write",
    "wrong", "yard", "year", "yes", "yet", "you", "young", "your",
)
