//! Scenario files: one JSON document describing a map, the workspace
//! parameters, the endpoints and the experiment settings.

use std::path::{Path, PathBuf};

use active_coreset::oracle::{AnalyticOracle, BitmapOracle, ConvexShape, GrayMap, OracleStats, DEFAULT_THRESHOLD};
use active_coreset::{
    make_analytic_oracle, BoundingBox, MembershipOracle, Meta64, PlannerConfig, PlannerKind, Point64, PreprocessConfig,
    ShapeSpec,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario field `{field}` (line {line}, column {column}): {message}")]
    Parse { field: String, line: usize, column: usize, message: String },
    #[error("scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Core(#[from] active_coreset::Error),
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSource {
    Analytic {
        shapes: Vec<ShapeSpec<f64>>,
    },
    /// A binary PGM; the path is relative to the scenario file.
    Bitmap {
        path: PathBuf,
        meters_per_pixel: f64,
        #[serde(default)]
        threshold: Option<u8>,
    },
    /// A synthetic bitmap: the shapes rasterized at pixel centres.
    Raster {
        width: usize,
        height: usize,
        meters_per_pixel: f64,
        shapes: Vec<ShapeSpec<f64>>,
    },
}

/// Planner overrides; anything left out gets a default scaled to the map.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSettings {
    pub step_size: Option<f64>,
    pub goal_bias: Option<f64>,
    pub max_iterations: Option<usize>,
    pub goal_tolerance: Option<f64>,
    pub rewire_factor: Option<f64>,
    pub edge_resolution: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSettings {
    pub budget: Option<u64>,
    pub probe_spacing: Option<f64>,
    pub query_budget: Option<u64>,
    pub coreset_eps: Option<f64>,
    /// Longest ray-search stride; keep it below the narrowest obstacle gap.
    pub max_step: Option<f64>,
    /// Confirms each coreset halt with a wider search; on unless set false.
    pub confirm_halt: Option<bool>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapApproxSettings {
    /// Query counts at which agreement is recorded, besides completion.
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    /// Step of the RRT exploration baseline.
    pub rrt_step: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MveeCurveSettings {
    pub eps: Option<f64>,
    /// Which analytic shape to fit.
    #[serde(default)]
    pub shape: usize,
}

fn default_planners() -> Vec<PlannerKind> {
    vec![PlannerKind::Rrt, PlannerKind::RrtStar]
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub map: MapSource,
    /// Required for analytic maps; bitmaps default to their pixel extent.
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
    pub eps: f64,
    pub inradius_lb: f64,
    pub circumradius_ub: f64,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    #[serde(default = "default_planners")]
    pub planners: Vec<PlannerKind>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub planner: PlannerSettings,
    #[serde(default)]
    pub preprocess: PreprocessSettings,
    #[serde(default)]
    pub map_approx: MapApproxSettings,
    #[serde(default)]
    pub mvee_curve: MveeCurveSettings,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse { field, line: inner.line(), column: inner.column(), message: inner.to_string() }
        })?;
        s.base_dir = base_dir.to_path_buf();
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return Err(invalid("name", "must be non-empty without commas or quotes"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.goal.len() != self.dim() {
            return Err(invalid("goal", "dimension differs from start"));
        }
        if self.planners.is_empty() {
            return Err(invalid("planners", "list is empty"));
        }
        if let MapSource::Bitmap { path, .. } = &self.map {
            let full = self.base_dir.join(path);
            if !full.is_file() {
                return Err(invalid("map.path", format!("file {} does not exist", full.display())));
            }
        }
        if matches!(self.map, MapSource::Bitmap { .. } | MapSource::Raster { .. }) && self.dim() != 2 {
            return Err(invalid("start", "bitmap maps are planar"));
        }
        let b = self.bounds()?;
        for (field, p) in [("start", &self.start), ("goal", &self.goal)] {
            if !b.contains(&Point64::new(p)) {
                return Err(invalid(field, "outside the bounds"));
            }
        }
        self.meta()?;
        Ok(())
    }

    pub fn bounds(&self) -> Result<BoundingBox<f64>, ScenarioError> {
        if let Some(b) = &self.bounds {
            if b.lo.len() != self.dim() || b.hi.len() != self.dim() {
                return Err(invalid("bounds", "dimension differs from start"));
            }
            return BoundingBox::new(Point64::new(&b.lo), Point64::new(&b.hi))
                .map_err(|e| invalid("bounds", e.to_string()));
        }
        let (w, h, mpp) = match &self.map {
            MapSource::Analytic { .. } => return Err(invalid("bounds", "required for analytic maps")),
            MapSource::Raster { width, height, meters_per_pixel, .. } => (*width, *height, *meters_per_pixel),
            MapSource::Bitmap { path, meters_per_pixel, .. } => {
                let map = GrayMap::load(&self.base_dir.join(path))?;
                (map.width, map.height, *meters_per_pixel)
            }
        };
        BoundingBox::new(Point64::new(&[0.0, 0.0]), Point64::new(&[w as f64 * mpp, h as f64 * mpp]))
            .map_err(|e| invalid("map", e.to_string()))
    }

    pub fn meta(&self) -> Result<Meta64, ScenarioError> {
        Meta64::new(self.bounds()?, self.eps, self.inradius_lb, self.circumradius_ub)
            .map_err(|e| invalid("eps", e.to_string()))
    }

    pub fn planner_config(&self) -> Result<PlannerConfig<f64>, ScenarioError> {
        let b = self.bounds()?;
        let extent = (0..self.dim()).map(|i| b.hi[i] - b.lo[i]).fold(0.0, f64::max);
        let p = &self.planner;
        let step = p.step_size.unwrap_or(extent / 20.0);
        let mut cfg = PlannerConfig::new(step, p.edge_resolution.unwrap_or(self.eps));
        cfg.goal_bias = p.goal_bias.unwrap_or(cfg.goal_bias);
        cfg.max_iterations = p.max_iterations.unwrap_or(cfg.max_iterations);
        cfg.goal_tolerance = p.goal_tolerance.unwrap_or(step);
        cfg.rewire_factor = p.rewire_factor.unwrap_or(cfg.rewire_factor);
        cfg.validate().map_err(|e| invalid("planner", e.to_string()))?;
        Ok(cfg)
    }

    pub fn preprocess_config(&self) -> PreprocessConfig<f64> {
        let p = &self.preprocess;
        PreprocessConfig {
            budget: p.budget.unwrap_or(u64::MAX),
            probe_spacing: p.probe_spacing,
            query_budget: p.query_budget,
            coreset_eps: p.coreset_eps,
            max_step: p.max_step,
            confirm_halt: p.confirm_halt.unwrap_or(true),
        }
    }

    /// Builds the oracle described by the map source.
    pub fn world(&self) -> Result<World, ScenarioError> {
        let meta = self.meta()?;
        let oracle = match &self.map {
            MapSource::Analytic { shapes } => WorldOracle::Analytic(make_analytic_oracle(shapes, meta.clone())?),
            MapSource::Bitmap { path, meters_per_pixel, threshold } => {
                let map = GrayMap::load(&self.base_dir.join(path))?;
                let t = threshold.unwrap_or(DEFAULT_THRESHOLD);
                WorldOracle::Bitmap(BitmapOracle::new(map, t, *meters_per_pixel, meta.clone())?)
            }
            MapSource::Raster { width, height, meters_per_pixel, shapes } => {
                let map = rasterize(shapes, *width, *height, *meters_per_pixel, &meta)?;
                WorldOracle::Bitmap(BitmapOracle::new(map, DEFAULT_THRESHOLD, *meters_per_pixel, meta.clone())?)
            }
        };
        Ok(World { scenario: self.clone(), meta, oracle })
    }
}

/// Draws the shapes into a map: 0 where a pixel centre is inside a shape,
/// 255 elsewhere.
pub fn rasterize(
    shapes: &[ShapeSpec<f64>],
    width: usize,
    height: usize,
    mpp: f64,
    meta: &Meta64,
) -> Result<GrayMap, ScenarioError> {
    let convex = shapes.iter().map(|s| ConvexShape::from_spec(s, 2)).collect::<Result<Vec<_>, _>>()?;
    let blank = BitmapOracle::new(GrayMap::new(width, height, 255), DEFAULT_THRESHOLD, mpp, meta.clone())?;
    let mut map = GrayMap::new(width, height, 255);
    for row in 0..height {
        for col in 0..width {
            let c = blank.pixel_center(col, row);
            if convex.iter().any(|s| s.contains(&c)) {
                map.set(col, row, 0);
            }
        }
    }
    Ok(map)
}

pub enum WorldOracle {
    Analytic(AnalyticOracle<f64>),
    Bitmap(BitmapOracle<f64>),
}

impl MembershipOracle<f64> for WorldOracle {
    fn query(&self, p: &Point64) -> bool {
        match self {
            WorldOracle::Analytic(o) => o.query(p),
            WorldOracle::Bitmap(o) => o.query(p),
        }
    }
    fn stats(&self) -> OracleStats {
        match self {
            WorldOracle::Analytic(o) => o.stats(),
            WorldOracle::Bitmap(o) => o.stats(),
        }
    }
    fn dim(&self) -> usize {
        match self {
            WorldOracle::Analytic(o) => o.dim(),
            WorldOracle::Bitmap(o) => o.dim(),
        }
    }
}

/// A loaded scenario with its oracle.
pub struct World {
    pub scenario: Scenario,
    pub meta: Meta64,
    pub oracle: WorldOracle,
}

impl World {
    /// Ground-truth membership that does not touch the query counters.
    pub fn truth(&self, p: &Point64) -> bool {
        match &self.oracle {
            WorldOracle::Analytic(o) => o.contains_uncounted(p),
            WorldOracle::Bitmap(o) => o.pixel_of(p).is_some_and(|(c, r)| o.is_obstacle_pixel(c, r)),
        }
    }

    pub fn bitmap(&self) -> Option<&BitmapOracle<f64>> {
        match &self.oracle {
            WorldOracle::Bitmap(o) => Some(o),
            WorldOracle::Analytic(_) => None,
        }
    }

    pub fn start(&self) -> Point64 {
        Point64::new(&self.scenario.start)
    }

    pub fn goal(&self) -> Point64 {
        Point64::new(&self.scenario.goal)
    }

    /// Obstacle volume inside the bounds: exact pixel count for bitmaps, a
    /// midpoint-grid estimate for analytic maps.
    pub fn obstacle_volume(&self) -> f64 {
        let b = &self.meta.bounds;
        if let Some(o) = self.bitmap() {
            let map = o.map();
            let mut n = 0usize;
            for row in 0..map.height {
                for col in 0..map.width {
                    n += o.is_obstacle_pixel(col, row) as usize;
                }
            }
            return n as f64 * o.meters_per_pixel() * o.meters_per_pixel();
        }
        let d = b.dim();
        let per_axis: usize = if d <= 2 { 512 } else { 64 };
        let total = per_axis.pow(d as u32);
        let mut hits = 0usize;
        for mut k in 0..total {
            let mut p = Point64::zeros(d);
            for i in 0..d {
                let idx = k % per_axis;
                k /= per_axis;
                p[i] = b.lo[i] + (idx as f64 + 0.5) / per_axis as f64 * (b.hi[i] - b.lo[i]);
            }
            hits += self.truth(&p) as usize;
        }
        b.volume() * hits as f64 / total as f64
    }
}
