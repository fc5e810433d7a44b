use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::session::{Dataset, IdSampler, SessionModel};
use super::{coreset_farthest, pool_ensdis_select};
use crate::error::{Error, Result};
use crate::transforms::{ImageTransform, TransformRegistry};

/// What a strategy may consult when choosing its images.
pub struct SelectionContext<'a> {
    pub session: usize,
    pub dataset: &'a Dataset,
    pub model: &'a dyn SessionModel,
    /// Corpus ids of every untransformed image trained on so far.
    pub trained: &'a [usize],
    pub sampler: &'a mut IdSampler,
}

/// Supplies the special share of each session's images.
pub trait BatchStrategy: Send + Sync {
    fn name(&self) -> String;

    /// Picks `count` corpus ids and removes them from the sampler.
    fn select(&self, count: usize, ctx: &mut SelectionContext) -> Result<Vec<usize>>;

    /// Transform applied to the selected images before training, if any.
    fn transform(&self) -> Option<&dyn ImageTransform> {
        None
    }
}

/// Fresh normal images.
pub struct Normal;

impl BatchStrategy for Normal {
    fn name(&self) -> String {
        "normal".into()
    }
    fn select(&self, count: usize, ctx: &mut SelectionContext) -> Result<Vec<usize>> {
        ctx.sampler.draw(count)
    }
}

/// Fresh normal images passed through an image transform.
pub struct Transformed(pub Box<dyn ImageTransform>);

impl BatchStrategy for Transformed {
    fn name(&self) -> String {
        self.0.name()
    }
    fn select(&self, count: usize, ctx: &mut SelectionContext) -> Result<Vec<usize>> {
        ctx.sampler.draw(count)
    }
    fn transform(&self) -> Option<&dyn ImageTransform> {
        Some(self.0.as_ref())
    }
}

/// Ensemble disagreement shortlist, spread by coreset over frozen features.
pub struct PoolEnsDis {
    pub pool: usize,
    pub shortlist: usize,
}

impl BatchStrategy for PoolEnsDis {
    fn name(&self) -> String {
        "pool-ensdis".into()
    }
    fn select(&self, count: usize, ctx: &mut SelectionContext) -> Result<Vec<usize>> {
        let pool = ctx.sampler.pool(self.pool.max(count));
        let x = ctx.dataset.inputs.select_columns(&pool);
        let picks = pool_ensdis_select(ctx.model.members(), &x, count, self.shortlist)?;
        let ids: Vec<usize> = picks.into_iter().map(|i| pool[i]).collect();
        ctx.sampler.consume(&ids);
        Ok(ids)
    }
}

/// Coreset on predicted responses, anchored at the images already trained on.
pub struct Coreset {
    pub pool: usize,
}

impl BatchStrategy for Coreset {
    fn name(&self) -> String {
        "coreset".into()
    }
    fn select(&self, count: usize, ctx: &mut SelectionContext) -> Result<Vec<usize>> {
        let pool = ctx.sampler.pool(self.pool.max(count));
        let candidates = ctx
            .model
            .predict(&ctx.dataset.inputs.select_columns(&pool))?;
        let anchors = if ctx.trained.is_empty() {
            DMatrix::zeros(candidates.nrows(), 0)
        } else {
            ctx.model
                .predict(&ctx.dataset.inputs.select_columns(ctx.trained))?
        };
        let picks = coreset_farthest(&candidates, &anchors, count)?;
        let ids: Vec<usize> = picks.into_iter().map(|i| pool[i]).collect();
        ctx.sampler.consume(&ids);
        Ok(ids)
    }
}

/// Pool sizes for the selection strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyParams {
    pub pool: usize,
    pub shortlist: usize,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            pool: 4000,
            shortlist: 400,
        }
    }
}

type StrategyFactory = fn(&StrategyParams) -> Box<dyn BatchStrategy>;

/// Name-keyed table of batch strategies. Names not registered here fall
/// through to the transform registry, so `top-edges:10` or
/// `gaudy-smooth:4` work as strategies too.
pub struct StrategyRegistry {
    factories: BTreeMap<&'static str, StrategyFactory>,
    transforms: TransformRegistry,
    params: StrategyParams,
}

impl StrategyRegistry {
    pub fn new(params: StrategyParams) -> Self {
        let mut r = StrategyRegistry {
            factories: BTreeMap::new(),
            transforms: TransformRegistry::with_builtins(),
            params,
        };
        r.register("normal", |_| Box::new(Normal));
        r.register("pool-ensdis", |p| {
            Box::new(PoolEnsDis {
                pool: p.pool,
                shortlist: p.shortlist,
            })
        });
        r.register("coreset", |p| Box::new(Coreset { pool: p.pool }));
        r
    }

    pub fn register(&mut self, name: &'static str, factory: StrategyFactory) {
        self.factories.insert(name, factory);
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn build(&self, spec: &str) -> Result<Box<dyn BatchStrategy>> {
        if let Some(f) = self.factories.get(spec.trim()) {
            return Ok(f(&self.params));
        }
        match self.transforms.build(spec) {
            Ok(t) => Ok(Box::new(Transformed(t))),
            Err(Error::Unknown { .. }) => Err(Error::Unknown {
                kind: "strategy",
                name: spec.to_string(),
            }),
            Err(e) => Err(e),
        }
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::new(StrategyParams::default())
    }
}
