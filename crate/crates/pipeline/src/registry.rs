//! Operator catalogue: names, input and output kinds.

/// Kind of value flowing along a pipeline edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Image,
    Labels,
    Table,
}

impl Kind {
    /// Images and label images travel through `<image>` inputs, tables
    /// through `<meta>` inputs.
    pub fn is_meta(self) -> bool {
        self == Kind::Table
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OpInfo {
    pub name: &'static str,
    pub inputs: &'static [Kind],
    pub outputs: &'static [Kind],
}

use Kind::{Image, Labels, Table};

pub const OPERATORS: &[OpInfo] = &[
    OpInfo { name: "ImageReader", inputs: &[Image], outputs: &[Image] },
    OpInfo { name: "MedianImageFilter", inputs: &[Image], outputs: &[Image] },
    OpInfo { name: "DiscreteGaussianImageFilter", inputs: &[Image], outputs: &[Image] },
    OpInfo { name: "LoGSeedDetection", inputs: &[Image], outputs: &[Table] },
    OpInfo { name: "EdmSeedDetection", inputs: &[Image], outputs: &[Labels, Table] },
    OpInfo { name: "SeedFusion", inputs: &[Table], outputs: &[Table] },
    OpInfo { name: "FuzzyScoring", inputs: &[Table], outputs: &[Table] },
    OpInfo { name: "FuzzyFilter", inputs: &[Table], outputs: &[Table] },
    OpInfo { name: "FuzzyLabelFilter", inputs: &[Labels, Table], outputs: &[Labels, Table] },
    OpInfo { name: "TwangSegmentation", inputs: &[Image, Table], outputs: &[Labels, Table] },
    OpInfo { name: "OtsuSegmentation", inputs: &[Image], outputs: &[Labels, Table] },
    OpInfo { name: "OtsuWatershedSegmentation", inputs: &[Image, Table], outputs: &[Labels, Table] },
    OpInfo { name: "WatershedSplitting", inputs: &[Image, Labels, Table], outputs: &[Labels, Table] },
    OpInfo { name: "SegmentFusion", inputs: &[Labels, Table, Labels, Table], outputs: &[Labels, Table] },
    OpInfo { name: "SeedPointFusion", inputs: &[Table, Table], outputs: &[Table] },
    OpInfo { name: "IntensityFusion", inputs: &[Image, Image], outputs: &[Image] },
];

pub fn lookup(name: &str) -> Option<&'static OpInfo> {
    OPERATORS.iter().find(|o| o.name == name)
}
