//! Published reference figures for the full CHUBS corpus and the deep-model
//! baselines. These are reported alongside desk-scale results for comparison;
//! nothing in the crate is calibrated against them.

/// `(source, chinese name, documents, slips, characters)`.
pub const CHUBS_SOURCES: [(&str, &str, usize, usize, usize); 15] = [
    ("Tsinghua University Slips", "清华简", 50, 1402, 31468),
    ("Shanghai Museum Slips", "上博简", 60, 881, 25795),
    ("Baoshan Slips", "包山简", 4, 337, 12647),
    ("Guodian Slips", "郭店简", 18, 705, 11865),
    ("Geling Slips", "葛陵简", 8, 743, 6209),
    ("Zenghouyi Slips", "曾侯乙简", 4, 198, 6016),
    ("Jiudian Slips", "九店简", 2, 232, 2956),
    ("Wangshan Slips", "望山简", 3, 273, 2218),
    ("Changtaiguan Slips", "长台关简", 3, 148, 1504),
    ("Zidanku Silk", "子弹库帛", 7, 7, 1471),
    ("Yangtianhu Slips", "仰天湖简", 1, 42, 335),
    ("Wulipai Slips", "五里牌简", 1, 18, 109),
    ("Xiyangpo Slips", "夕阳坡简", 1, 2, 54),
    ("Yangjiawan Slips", "杨家湾简", 1, 38, 41),
    ("Caojiagang Slips", "曹家岗简", 1, 7, 34),
];

pub const CHUBS_TOTAL_DOCUMENTS: usize = 164;
pub const CHUBS_TOTAL_SLIPS: usize = 5033;
pub const CHUBS_TOTAL_CHARACTERS: usize = 102_722;

/// Lower bound on the share of out-of-vocabulary characters.
pub const CHUBS_MIN_OOV_RATE: f64 = 0.27;

/// Size of the Shuowen Jiezi section-header list used as the component seed.
pub const SEED_COMPONENT_COUNT: usize = 540;
/// Component vocabulary size after growing the seed over all annotations.
pub const GROWN_COMPONENT_COUNT: usize = 798;

/// Minimum-count settings used for recognition experiments.
pub const CHAR_RECOGNITION_MIN_COUNTS: [usize; 2] = [3, 10];
pub const COMPONENT_RECOGNITION_MIN_COUNTS: [usize; 2] = [2, 20];

/// YOLOv5 detection `(precision, recall, f1)`.
pub const DETECTION_YOLOV5: (f64, f64, f64) = (0.998, 0.996, 0.997);

/// Character recognition top-1/3/5/10 accuracy in percent, keyed by
/// `(model, min_count)`.
pub const CHAR_RECOGNITION_TOPK: [(&str, usize, [f64; 4]); 4] = [
    ("ResNet", 3, [61.23, 65.48, 70.84, 72.33]),
    ("ViT", 3, [73.48, 84.65, 87.45, 89.95]),
    ("ResNet", 10, [72.60, 83.70, 87.18, 90.57]),
    ("ViT", 10, [90.11, 95.03, 96.06, 97.16]),
];

/// Component recognition `(recall, precision, f1)` in percent, keyed by
/// `(model, min_count)`.
pub const COMPONENT_RECOGNITION: [(&str, usize, [f64; 3]); 4] = [
    ("ResNet", 2, [84.79, 77.32, 80.88]),
    ("ViT", 2, [22.48, 26.31, 24.24]),
    ("ResNet", 20, [85.70, 78.31, 80.19]),
    ("ViT", 20, [28.57, 28.23, 28.40]),
];

/// POS tagging `(recall, precision, f1)` in percent.
pub const POS_CHAR_TOKENIZER: [f64; 3] = [47.9, 43.8, 45.3];
pub const POS_MULTI_GRANULARITY: [f64; 3] = [50.2, 46.1, 47.8];
