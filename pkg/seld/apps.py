from django.apps import AppConfig


class SeldConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "seld"
    verbose_name = "Modelo CRNN y métricas SELD"
