from django.apps import AppConfig


class MetalearnConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "metalearn"
    verbose_name = "Meta-aprendizaje por salas"
