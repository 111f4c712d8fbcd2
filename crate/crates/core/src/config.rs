//! Pipeline configuration and its flat key-value file form.
//!
//! The on-disk format is one `key = value` pair per line, `#` comments,
//! no sections and no quoting — deliberately parseable without a
//! dependency. `to_config_string` and `from_config_str` round-trip
//! losslessly.

use std::fmt;
use std::str::FromStr;

use crate::buffer::PadMode;
use crate::dihedral::DihedralTransform;
use crate::error::{Result, SglcError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOrder {
    GfgThenLfe,
    LfeThenGfg,
    GfgOnly,
    LfeOnly,
}

impl StageOrder {
    pub const ALL: [StageOrder; 4] = [
        StageOrder::GfgThenLfe,
        StageOrder::LfeThenGfg,
        StageOrder::GfgOnly,
        StageOrder::LfeOnly,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StageOrder::GfgThenLfe => "gfg-then-lfe",
            StageOrder::LfeThenGfg => "lfe-then-gfg",
            StageOrder::GfgOnly => "gfg-only",
            StageOrder::LfeOnly => "lfe-only",
        }
    }

    pub fn uses_gfg(&self) -> bool {
        !matches!(self, StageOrder::LfeOnly)
    }

    pub fn uses_lfe(&self) -> bool {
        !matches!(self, StageOrder::GfgOnly)
    }
}

impl FromStr for StageOrder {
    type Err = SglcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gfg-then-lfe" => Ok(StageOrder::GfgThenLfe),
            "lfe-then-gfg" => Ok(StageOrder::LfeThenGfg),
            "gfg-only" => Ok(StageOrder::GfgOnly),
            "lfe-only" => Ok(StageOrder::LfeOnly),
            other => Err(SglcError::Config(format!(
                "unknown order `{other}` (expected gfg-then-lfe, lfe-then-gfg, gfg-only or lfe-only)"
            ))),
        }
    }
}

impl fmt::Display for StageOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which per-patch transform a stage runs.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessorSpec {
    Identity,
    DarkChannel {
        omega: f64,
        t_floor: f64,
        kernel: usize,
    },
    /// Command argv prefix; input/output tensor paths are appended.
    External { command: Vec<String> },
}

impl ProcessorSpec {
    pub fn dcp_default() -> Self {
        ProcessorSpec::DarkChannel {
            omega: 0.95,
            t_floor: 0.1,
            kernel: 15,
        }
    }
}

impl fmt::Display for ProcessorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessorSpec::Identity => f.write_str("identity"),
            ProcessorSpec::DarkChannel {
                omega,
                t_floor,
                kernel,
            } => write!(f, "dcp:omega={omega},t_floor={t_floor},kernel={kernel}"),
            ProcessorSpec::External { command } => write!(f, "external:{}", command.join(" ")),
        }
    }
}

impl FromStr for ProcessorSpec {
    type Err = SglcError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(ProcessorSpec::Identity);
        }
        if s == "dcp" {
            return Ok(ProcessorSpec::dcp_default());
        }
        if let Some(params) = s.strip_prefix("dcp:") {
            let mut omega = 0.95;
            let mut t_floor = 0.1;
            let mut kernel = 15usize;
            for pair in params.split(',').filter(|p| !p.is_empty()) {
                let (key, value) = pair.split_once('=').ok_or_else(|| {
                    SglcError::Config(format!("bad dcp parameter `{pair}` (expected key=value)"))
                })?;
                match key {
                    "omega" => omega = parse_num(value, "omega")?,
                    "t_floor" => t_floor = parse_num(value, "t_floor")?,
                    "kernel" => {
                        kernel = value.parse().map_err(|_| {
                            SglcError::Config(format!("bad kernel `{value}`"))
                        })?
                    }
                    other => {
                        return Err(SglcError::Config(format!("unknown dcp parameter `{other}`")))
                    }
                }
            }
            return Ok(ProcessorSpec::DarkChannel {
                omega,
                t_floor,
                kernel,
            });
        }
        if let Some(cmd) = s.strip_prefix("external:") {
            let command: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if command.is_empty() {
                return Err(SglcError::Config("external command is empty".into()));
            }
            return Ok(ProcessorSpec::External { command });
        }
        Err(SglcError::Config(format!(
            "unknown processor `{s}` (expected identity, dcp[:...] or external:<cmd>)"
        )))
    }
}

fn parse_num(value: &str, key: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| SglcError::Config(format!("bad {key} `{value}`")))
}

/// Full description of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub grid_side: usize,
    pub window_side: usize,
    pub order: StageOrder,
    pub mops: bool,
    /// Kept in canonical order (the order of [`DihedralTransform::ALL`]).
    pub transforms: Vec<DihedralTransform>,
    pub gfg_processor: ProcessorSpec,
    pub lfe_processor: ProcessorSpec,
    pub pad_mode: PadMode,
    /// 0 means "use all available cores".
    pub workers: usize,
    pub seed: u64,
    pub external_timeout_secs: u64,
    /// 0 means "same as the worker count".
    pub external_max_children: usize,
    /// Diagnostic: overlapping windows merged without the spline taper.
    pub mops_flat_weights: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            grid_side: 1024,
            window_side: 1024,
            order: StageOrder::GfgThenLfe,
            mops: true,
            transforms: DihedralTransform::ALL.to_vec(),
            gfg_processor: ProcessorSpec::Identity,
            lfe_processor: ProcessorSpec::Identity,
            pad_mode: PadMode::Reflect,
            workers: 0,
            seed: 0,
            external_timeout_secs: 300,
            external_max_children: 0,
            mops_flat_weights: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_side < 4 {
            return Err(SglcError::Config(format!(
                "grid side {} must be >= 4",
                self.grid_side
            )));
        }
        if self.window_side < 4 {
            return Err(SglcError::Config(format!(
                "window side {} must be >= 4",
                self.window_side
            )));
        }
        if self.mops && self.window_side % 4 != 0 {
            return Err(SglcError::Config(format!(
                "window side {} must be a multiple of 4 when the smoother is on",
                self.window_side
            )));
        }
        if self.order.uses_lfe()
            && self.mops
            && (self.transforms.is_empty()
                || !self.transforms.contains(&DihedralTransform::IDENTITY))
        {
            return Err(SglcError::Config(
                "transform set must be non-empty and include the identity (r0)".into(),
            ));
        }
        if let ProcessorSpec::DarkChannel {
            omega,
            t_floor,
            kernel,
        } = &self.gfg_processor
        {
            crate::dehaze::DarkChannelDehazer::new(*omega, *t_floor, *kernel).validate()?;
        }
        if let ProcessorSpec::DarkChannel {
            omega,
            t_floor,
            kernel,
        } = &self.lfe_processor
        {
            crate::dehaze::DarkChannelDehazer::new(*omega, *t_floor, *kernel).validate()?;
        }
        Ok(())
    }

    /// Sorts and dedups the transform set into canonical order.
    pub fn canonicalize_transforms(&mut self) {
        let mut canonical = Vec::new();
        for t in DihedralTransform::ALL {
            if self.transforms.contains(&t) {
                canonical.push(t);
            }
        }
        self.transforms = canonical;
    }

    pub fn to_config_string(&self) -> String {
        let transforms: Vec<String> = self.transforms.iter().map(|t| t.token()).collect();
        format!(
            "# sglc pipeline configuration\n\
             grid_side = {}\n\
             window_side = {}\n\
             order = {}\n\
             mops = {}\n\
             transforms = {}\n\
             gfg_processor = {}\n\
             lfe_processor = {}\n\
             pad_mode = {}\n\
             workers = {}\n\
             seed = {}\n\
             external_timeout_secs = {}\n\
             external_max_children = {}\n\
             mops_flat_weights = {}\n",
            self.grid_side,
            self.window_side,
            self.order,
            onoff(self.mops),
            transforms.join(","),
            self.gfg_processor,
            self.lfe_processor,
            self.pad_mode.as_str(),
            self.workers,
            self.seed,
            self.external_timeout_secs,
            self.external_max_children,
            onoff(self.mops_flat_weights),
        )
    }

    pub fn from_config_str(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SglcError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "grid_side" => cfg.grid_side = parse_usize(value, key)?,
                "window_side" => cfg.window_side = parse_usize(value, key)?,
                "order" => cfg.order = value.parse()?,
                "mops" => cfg.mops = parse_bool(value, key)?,
                "transforms" => cfg.transforms = parse_transforms(value)?,
                "gfg_processor" => cfg.gfg_processor = value.parse()?,
                "lfe_processor" => cfg.lfe_processor = value.parse()?,
                "pad_mode" => cfg.pad_mode = PadMode::parse(value)?,
                "workers" => cfg.workers = parse_usize(value, key)?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| SglcError::Config(format!("bad seed `{value}`")))?
                }
                "external_timeout_secs" => {
                    cfg.external_timeout_secs = value.parse().map_err(|_| {
                        SglcError::Config(format!("bad external_timeout_secs `{value}`"))
                    })?
                }
                "external_max_children" => cfg.external_max_children = parse_usize(value, key)?,
                "mops_flat_weights" => cfg.mops_flat_weights = parse_bool(value, key)?,
                other => {
                    return Err(SglcError::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.canonicalize_transforms();
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_transforms(value: &str) -> Result<Vec<DihedralTransform>> {
    if value == "d4" {
        return Ok(DihedralTransform::ALL.to_vec());
    }
    if value == "identity" {
        return Ok(vec![DihedralTransform::IDENTITY]);
    }
    let mut out = Vec::new();
    for tok in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let t = DihedralTransform::parse_token(tok)
            .ok_or_else(|| SglcError::Config(format!("unknown transform token `{tok}`")))?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

fn onoff(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn parse_bool(value: &str, key: &str) -> Result<bool> {
    match value {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(SglcError::Config(format!(
            "bad {key} `{other}` (expected on or off)"
        ))),
    }
}

fn parse_usize(value: &str, key: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| SglcError::Config(format!("bad {key} `{value}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_round_trips() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_config_string();
        let parsed = PipelineConfig::from_config_str(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        assert!(PipelineConfig::from_config_str("bogus = 1").is_err());
        assert!(PipelineConfig::from_config_str("order = sideways").is_err());
        assert!(PipelineConfig::from_config_str("mops = maybe").is_err());
        assert!(PipelineConfig::from_config_str("grid_side = -3").is_err());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let cfg =
            PipelineConfig::from_config_str("# hello\n\n  grid_side = 64\nwindow_side=32\n")
                .unwrap();
        assert_eq!(cfg.grid_side, 64);
        assert_eq!(cfg.window_side, 32);
    }

    #[test]
    fn d4_shorthand_expands() {
        let cfg = PipelineConfig::from_config_str("transforms = d4").unwrap();
        assert_eq!(cfg.transforms.len(), 8);
        let cfg = PipelineConfig::from_config_str("transforms = r0,r180").unwrap();
        assert_eq!(cfg.transforms.len(), 2);
    }

    #[test]
    fn mops_requires_identity_transform() {
        let err = PipelineConfig::from_config_str("transforms = r90");
        assert!(err.is_err());
        // fine when the local stage is skipped
        let ok = PipelineConfig::from_config_str("transforms = r90\norder = gfg-only");
        assert!(ok.is_ok());
    }

    #[test]
    fn window_side_multiple_of_four_with_mops() {
        assert!(PipelineConfig::from_config_str("window_side = 10").is_err());
        assert!(PipelineConfig::from_config_str("window_side = 10\nmops = off").is_ok());
    }

    #[test]
    fn processor_specs_round_trip() {
        for s in [
            "identity",
            "dcp:omega=0.9,t_floor=0.05,kernel=7",
            "external:/usr/bin/env mymodel --fast",
        ] {
            let spec: ProcessorSpec = s.parse().unwrap();
            let printed = spec.to_string();
            let reparsed: ProcessorSpec = printed.parse().unwrap();
            assert_eq!(spec, reparsed);
        }
        // bare dcp expands to defaults
        let spec: ProcessorSpec = "dcp".parse().unwrap();
        assert_eq!(spec, ProcessorSpec::dcp_default());
    }

    fn arbitrary_config() -> impl Strategy<Value = PipelineConfig> {
        (
            (
                4usize..=256,
                (1usize..=64).prop_map(|k| k * 4),
                0usize..4,
                any::<bool>(),
                prop::collection::vec(0usize..8, 0..8),
                0usize..3,
                0usize..3,
            ),
            (
                0usize..3,
                0usize..9,
                any::<u64>(),
                1u64..1000,
                0usize..5,
                any::<bool>(),
            ),
        )
            .prop_map(
                |(
                    (grid, window, order, mops, extra_transforms, gfg, lfe),
                    (pad, workers, seed, timeout, children, flat),
                )| {
                    let mut transforms = vec![DihedralTransform::IDENTITY];
                    for i in extra_transforms {
                        transforms.push(DihedralTransform::ALL[i]);
                    }
                    let spec_of = |i: usize| match i {
                        0 => ProcessorSpec::Identity,
                        1 => ProcessorSpec::DarkChannel {
                            omega: 0.5,
                            t_floor: 0.25,
                            kernel: 7,
                        },
                        _ => ProcessorSpec::External {
                            command: vec!["model".into(), "--flag".into()],
                        },
                    };
                    let mut cfg = PipelineConfig {
                        grid_side: grid,
                        window_side: window,
                        order: StageOrder::ALL[order],
                        mops,
                        transforms,
                        gfg_processor: spec_of(gfg),
                        lfe_processor: spec_of(lfe),
                        pad_mode: [PadMode::Reflect, PadMode::Zero, PadMode::Edge][pad],
                        workers,
                        seed,
                        external_timeout_secs: timeout,
                        external_max_children: children,
                        mops_flat_weights: flat,
                    };
                    cfg.canonicalize_transforms();
                    cfg
                },
            )
    }

    proptest! {
        #[test]
        fn any_valid_config_round_trips(cfg in arbitrary_config()) {
            let text = cfg.to_config_string();
            let parsed = PipelineConfig::from_config_str(&text).unwrap();
            prop_assert_eq!(parsed, cfg);
        }
    }
}
