"""Finite-difference checks for layers and whole models."""
import numpy as np

from oracles import max_rel_error, numerical_grad


def layer_gradient_errors(layer, x, rs, h=1e-5):
    """Max relative error of every analytic gradient of ``sum(layer(x) * R)``.

    Returns ``{"input": err, <param name>: err, ...}``.
    """
    out = layer.forward(x)
    proj = rs.standard_normal(out.shape)
    grad_in = layer.backward(proj)
    analytic = {"input": grad_in, **{k: v.copy() for k, v in layer.grads.items()}}

    def objective():
        return float(np.sum(layer.forward(x, cache=False) * proj))

    errors = {"input": max_rel_error(grad_in, numerical_grad(objective, x, h))}
    for name, p in layer.params.items():
        errors[name] = max_rel_error(analytic[name], numerical_grad(objective, p, h))
    return errors


def model_gradient_errors(model, x, target, loss_fn, h=1e-5):
    out = model.forward(x)
    model.backward(loss_fn(out, target).grad)
    analytic = [{k: v.copy() for k, v in layer.grads.items()} for layer in model.layers]

    def objective():
        return loss_fn(model.forward(x, cache=False), target).value

    worst = 0.0
    for layer, grads in zip(model.layers, analytic):
        for name, p in layer.params.items():
            worst = max(worst, max_rel_error(grads[name], numerical_grad(objective, p, h)))
    return worst
